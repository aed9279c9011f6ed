"""Balanced space-partitioning tree for exact nearest-neighbor search in 3-space.

Queries return exactly what a linear scan would, including the tie rule (equal
distances resolve to the lowest point index), and report how many point
distances and scalar comparisons each lookup performed. The batch entry point
walks the tree once per node with the whole active query subset, so counters
are identical to the one-at-a-time walk while the arithmetic stays vectorized.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

_BIG = np.iinfo(np.int64).max


class KDTree:
    def __init__(self, points, leaf_size: int = 8):
        points = np.ascontiguousarray(points, dtype=np.float64)
        if points.ndim != 2 or len(points) == 0:
            raise InvalidInputError("need a nonempty (n, d) point array")
        if leaf_size < 1:
            raise InvalidInputError("leaf_size must be >= 1")
        self.points = points
        self.leaf_size = leaf_size
        self._perm = np.arange(len(points))
        # node arrays; leaves carry (start, end) into _perm, internals a split
        self._split_dim = []
        self._split_val = []
        self._left = []
        self._right = []
        self._start = []
        self._end = []
        self._root = self._build(0, len(points))
        self._split_dim = np.asarray(self._split_dim, dtype=np.int64)
        self._split_val = np.asarray(self._split_val, dtype=np.float64)
        self._left = np.asarray(self._left, dtype=np.int64)
        self._right = np.asarray(self._right, dtype=np.int64)
        self._start = np.asarray(self._start, dtype=np.int64)
        self._end = np.asarray(self._end, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.points)

    def _new_node(self) -> int:
        for arr in (self._split_dim, self._split_val, self._left,
                    self._right, self._start, self._end):
            arr.append(-1)
        return len(self._split_dim) - 1

    def _build(self, lo: int, hi: int) -> int:
        node = self._new_node()
        if hi - lo <= self.leaf_size:
            self._start[node] = lo
            self._end[node] = hi
            return node
        sub = self._perm[lo:hi]
        coords = self.points[sub]
        spread = coords.max(axis=0) - coords.min(axis=0)
        dim = int(np.argmax(spread))
        order = np.argsort(coords[:, dim], kind="stable")
        self._perm[lo:hi] = sub[order]
        mid = (hi - lo) // 2
        # everything at or beyond the split value lives in the right subtree
        self._split_dim[node] = dim
        self._split_val[node] = self.points[self._perm[lo + mid], dim]
        self._left[node] = self._build(lo, lo + mid)
        self._right[node] = self._build(lo + mid, hi)
        return node

    def query(self, q):
        """Nearest neighbor for each row of q.

        Returns (indices, squared distances, distance_evals, comparisons),
        one entry per query.
        """
        q = np.atleast_2d(np.asarray(q, dtype=np.float64))
        m = len(q)
        best_d2 = np.full(m, np.inf)
        best_idx = np.full(m, _BIG, dtype=np.int64)
        evals = np.zeros(m, dtype=np.int64)
        comps = np.zeros(m, dtype=np.int64)
        self._search(self._root, np.arange(m), q, best_d2, best_idx, evals, comps)
        return best_idx, best_d2, evals, comps

    def _search(self, node, sel, q, best_d2, best_idx, evals, comps):
        if len(sel) == 0:
            return
        if self._split_dim[node] < 0:
            pts_idx = self._perm[self._start[node]:self._end[node]]
            pts = self.points[pts_idx]
            diff = q[sel][:, None, :] - pts[None, :, :]
            d2 = np.einsum("mkd,mkd->mk", diff, diff)
            k = len(pts_idx)
            # lexicographic (distance, index) minimum over the leaf
            d2min = d2.min(axis=1)
            cand = np.where(d2 == d2min[:, None], pts_idx[None, :], _BIG).min(axis=1)
            take = (d2min < best_d2[sel]) | (
                (d2min == best_d2[sel]) & (cand < best_idx[sel])
            )
            upd = sel[take]
            best_d2[upd] = d2min[take]
            best_idx[upd] = cand[take]
            evals[sel] += k
            comps[sel] += k
            return
        dim = self._split_dim[node]
        sval = self._split_val[node]
        s = q[sel, dim] - sval
        comps[sel] += 1
        near_left = s < 0.0
        left_sel = sel[near_left]
        right_sel = sel[~near_left]
        self._search(self._left[node], left_sel, q, best_d2, best_idx, evals, comps)
        self._search(self._right[node], right_sel, q, best_d2, best_idx, evals, comps)
        # cross the plane only when the hypersphere around the best still reaches it
        s2 = s * s
        go_right = left_sel[s2[near_left] <= best_d2[left_sel]]
        self._search(self._right[node], go_right, q, best_d2, best_idx, evals, comps)
        go_left = right_sel[s2[~near_left] <= best_d2[right_sel]]
        self._search(self._left[node], go_left, q, best_d2, best_idx, evals, comps)
