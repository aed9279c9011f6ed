"""Noncoherent detectors for G(2,1) constellations, with operation counters.

Three detectors are provided. The exhaustive one maximizes ||Y^H x||^2 over
all codewords. The tree-based one maps the received signal to the Bloch sphere
and finds the Euclidean nearest neighbor there, which picks the same codeword
because chordal distance is half of Bloch Euclidean distance. The layered
detector exploits the structure of layered-polygon constellations: the sphere
splits into an angular grid, the grid cell of the received point narrows the
candidates to at most four codewords, and a closed-form cell-to-index map
turns the winning candidate into a codeword index without storing the
constellation.

Ties always resolve to the lowest codeword index. All single-shot entry
points run through the batch implementations with one row, so scalar and
vectorized detection are exactly the same computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidInputError
from .geometry import Constellation
from .kdtree import KDTree
from .zopt import ZOptConstellation, ZOptStructure

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DetectionResult:
    index: int
    distance_evals: int
    comparisons: int


# ---------------------------------------------------------------------------
# rough estimation: collapse a 2xN observation to a single direction


def _gram_parts(Ys: np.ndarray):
    """Entries of Y Y^H for a batch of (n, 2, N) observations."""
    row0 = Ys[:, 0, :]
    row1 = Ys[:, 1, :]
    g00 = np.einsum("ij,ij->i", row0, row0.conj()).real
    g11 = np.einsum("ij,ij->i", row1, row1.conj()).real
    g01 = np.einsum("ij,ij->i", row0, row1.conj())
    return g00, g11, g01


def rough_estimate_batch(Ys: np.ndarray) -> np.ndarray:
    """Dominant left singular vector for each (2, N) observation in the batch.

    Closed-form eigenvector of the 2x2 matrix Y Y^H. Degenerate spectra
    (multiples of the identity) resolve to the first basis vector.
    """
    Ys = np.asarray(Ys, dtype=np.complex128)
    n, _, N = Ys.shape
    if N == 1:
        return Ys[:, :, 0].copy()
    g00, g11, g01 = _gram_parts(Ys)
    delta = 0.5 * (g00 - g11)
    r = np.sqrt(delta * delta + np.abs(g01) ** 2)
    out = np.empty((n, 2), dtype=np.complex128)
    # pick whichever component of the eigenvector is guaranteed away from zero
    hi = delta >= 0.0
    out[hi, 0] = r[hi] + delta[hi]
    out[hi, 1] = np.conj(g01[hi])
    lo = ~hi
    out[lo, 0] = g01[lo]
    out[lo, 1] = r[lo] - delta[lo]
    diag = np.abs(g01) == 0.0
    if np.any(diag):
        first = g00 >= g11
        out[diag & first] = (1.0, 0.0)
        out[diag & ~first] = (0.0, 1.0)
    norms = np.linalg.norm(out, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateInputError("zero observation has no dominant direction")
    return out / norms[:, None]


def rough_estimate(Y) -> np.ndarray:
    """Single-observation front end; N = 1 passes the column through unchanged."""
    return rough_estimate_batch(_as_batch(Y))[0]


def _bloch_of_raw(v: np.ndarray) -> np.ndarray:
    """Bloch points of unnormalized nonzero 2-vectors; phase-invariant."""
    n2 = np.abs(v[:, 0]) ** 2 + np.abs(v[:, 1]) ** 2
    if np.any(n2 == 0.0):
        raise DegenerateInputError("zero vector has no Bloch image")
    cross = np.conj(v[:, 0]) * v[:, 1]
    out = np.empty((len(v), 3), dtype=np.float64)
    out[:, 0] = 2.0 * cross.real
    out[:, 1] = 2.0 * cross.imag
    out[:, 2] = (np.abs(v[:, 0]) ** 2 - np.abs(v[:, 1]) ** 2)
    return out / n2[:, None]


def _angles_of_raw(v: np.ndarray):
    """Polar/azimuth angles of unnormalized nonzero 2-vectors."""
    n = np.sqrt(np.abs(v[:, 0]) ** 2 + np.abs(v[:, 1]) ** 2)
    if np.any(n == 0.0):
        raise DegenerateInputError("zero vector has no angles")
    z0 = np.abs(v[:, 0]) / n
    theta = 2.0 * np.arccos(np.clip(z0, 0.0, 1.0))
    a0 = np.abs(v[:, 0])
    phase = np.where(a0 > 0, v[:, 0] / np.where(a0 > 0, a0, 1.0), 1.0)
    phi = np.angle(v[:, 1] * np.conj(phase)) % TWO_PI
    phi = np.where(phi >= TWO_PI, 0.0, phi)
    return theta, phi


# ---------------------------------------------------------------------------
# exhaustive detector


def _score_matrix_parts(points: np.ndarray) -> np.ndarray:
    """(4, C) real factor so that scores = [g00, g11, 2Re g01, -2Im g01] @ parts."""
    x0 = points[:, 0]
    x1 = points[:, 1]
    m = np.conj(x0) * x1
    return np.vstack([np.abs(x0) ** 2, np.abs(x1) ** 2, m.real, m.imag])


class GlrtDetector:
    """argmax over the constellation of ||Y^H x||^2, evaluated for every codeword."""

    def __init__(self, constellation: Constellation):
        if len(constellation) == 0:
            raise InvalidInputError("empty constellation")
        self.constellation = constellation
        self._parts = _score_matrix_parts(constellation.array)

    def detect_batch(self, Ys: np.ndarray):
        Ys = np.asarray(Ys, dtype=np.complex128)
        g00, g11, g01 = _gram_parts(Ys)
        A = np.column_stack([g00, g11, 2.0 * g01.real, -2.0 * g01.imag])
        scores = A @ self._parts
        idx = np.argmax(scores, axis=1)
        C = self._parts.shape[1]
        n = len(Ys)
        counts = np.full(n, C, dtype=np.int64)
        return idx, counts.copy(), counts.copy()

    def detect(self, Y) -> DetectionResult:
        idx, evals, comps = self.detect_batch(_as_batch(Y))
        return DetectionResult(int(idx[0]), int(evals[0]), int(comps[0]))


# ---------------------------------------------------------------------------
# Bloch-sphere nearest-neighbor detector


class NearestNeighborIndex:
    """Space-partitioning index over a constellation's Bloch points."""

    def __init__(self, constellation: Constellation, leaf_size: int = 8):
        self.constellation = constellation
        self.leaf_size = leaf_size
        self.tree = KDTree(constellation.bloch, leaf_size=leaf_size)

    def __len__(self) -> int:
        return len(self.constellation)

    def query(self, bloch_points: np.ndarray):
        return self.tree.query(bloch_points)


class SoptDetector:
    """Nearest neighbor on the Bloch sphere; decision-identical to the GLRT."""

    def __init__(self, constellation: Constellation, leaf_size: int = 8):
        self.index = NearestNeighborIndex(constellation, leaf_size=leaf_size)

    @property
    def constellation(self) -> Constellation:
        return self.index.constellation

    def detect_batch(self, Ys: np.ndarray):
        est = rough_estimate_batch(np.asarray(Ys, dtype=np.complex128))
        idx, _, evals, comps = self.index.query(_bloch_of_raw(est))
        return idx, evals, comps

    def detect(self, Y) -> DetectionResult:
        idx, evals, comps = self.detect_batch(_as_batch(Y))
        return DetectionResult(int(idx[0]), int(evals[0]), int(comps[0]))


# ---------------------------------------------------------------------------
# layered-constellation detector


def azimuth_region(phi_z: float, z_max: int) -> int:
    """Sector index floor(phi / (pi / z_max)), clamped into [0, 2*z_max).

    An azimuth that reaches 2*pi (only possible through rounding) wraps to 0;
    values just below 2*pi stay in the last sector.
    """
    if phi_z >= TWO_PI:
        phi_z = max(phi_z - TWO_PI, 0.0)
    j = int(phi_z / (math.pi / z_max))
    return min(max(j, 0), 2 * z_max - 1)


def polar_region(theta_z: float, theta: np.ndarray) -> int:
    """Number of layer angles strictly below theta_z, found by bisection."""
    lo, hi = 0, len(theta)
    while lo < hi:
        mid = (lo + hi) // 2
        if theta[mid] < theta_z:
            lo = mid + 1
        else:
            hi = mid
    return lo


def _region_comparisons(l: int) -> int:
    return max(1, math.ceil(math.log2(l + 1)))


def cell_anchor_index_uniform(i, j0, z_max: int):
    """Closed-form codeword index (1-based) anchored to grid cell (i, j0).

    `i` is the polar region in [0, l]; `j0` the azimuth sector in
    [0, 2*z_max). For i >= 1 the result is the point of layer i azimuthally
    adjacent to sector j0; region 0 borrows layer 1. Sector arithmetic runs on
    the 1-based sector number, whose 2*z_max value encodes the wrap back to
    azimuth zero.
    """
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j0, dtype=np.int64) + 1
    dj = (j == 2 * z_max).astype(np.int64)
    odd = ((i % 2) == 1) | (i == 0)
    layer_term = np.where(i == 0, -dj, np.where(i % 2 == 1, i - 1 - dj, i - 1))
    offset = np.where(odd, j // 2 + 1, (j + 1) // 2)
    return layer_term * z_max + offset


def cell_anchor_index_half(i, j0, z_max: int, l: int):
    """Cell-to-index map for structures whose first and last layers are halved."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j0, dtype=np.int64) + 1
    d_last = (j == 2 * z_max).astype(np.int64)
    d_prev = (j == 2 * z_max - 1).astype(np.int64)
    edge = (i == 0) | (i == 1) | (i == l)
    delta = 3 * (i == 0) + (i == 1) * 1 - d_last - d_prev
    t_edge = (j + 1) // 4 + 1 + (z_max // 2) * delta
    t_even = (j + 1) // 2
    t_odd = j // 2 + 1 - z_max * d_last
    t = np.where(edge, t_edge, np.where((i % 2) == 0, t_even, t_odd))
    base = (2 * i - 3) * z_max // 2
    return base + t


def _candidate_azimuth_offset(ic, j0, z_max: int, l: int, half_layers: bool, phi_z):
    """|phi_z - azimuth of layer ic's point adjacent to sector j0|.

    Full layers alternate their azimuth offset with layer parity; halved edge
    layers keep only every other vertex, so their adjacent point snaps to the
    nearest multiple of four sectors.
    """
    j = np.asarray(j0, dtype=np.int64) + 1
    h = math.pi / z_max
    if half_layers:
        jm4 = j % 4
        g = np.select([jm4 == 1, jm4 == 2, jm4 == 3], [1, 2, -1], default=0)
        edge = (ic == 1) | (ic == l)
        f = ((ic % 2) == (j % 2)).astype(np.int64)
        a = np.where(edge, j - g, j - f)
    else:
        f = ((ic % 2) == (j % 2)).astype(np.int64)
        a = j - f
    return np.abs(np.asarray(phi_z) - a * h)


class ZOptDetectorState:
    """Angles and structure needed to detect a layered constellation.

    Holds l polar angles plus O(1) structure fields; detection never touches
    the codeword list. An explicit anchor table can be materialized for
    validation via `anchor_table`.
    """

    def __init__(self, structure: ZOptStructure, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if len(theta) != structure.l or np.any(np.diff(theta) <= 0.0):
            raise InvalidInputError("need l strictly increasing layer angles")
        self.structure = structure
        self.theta = theta
        self.layer_offsets = structure.layer_offsets

    @classmethod
    def from_constellation(cls, z: ZOptConstellation) -> "ZOptDetectorState":
        if int(sum(z.structure.Z_l)) != len(z.constellation):
            raise InvalidInputError("structure does not match the constellation size")
        return cls(z.structure, z.theta)

    @property
    def C(self) -> int:
        return self.structure.C

    def anchor_index(self, i, j0):
        """1-based codeword index anchored to grid cell (i, j0)."""
        s = self.structure
        if s.half_layers:
            return cell_anchor_index_half(i, j0, s.z_max, s.l)
        return cell_anchor_index_uniform(i, j0, s.z_max)

    def anchor_table(self) -> np.ndarray:
        """(l+1, 2*z_max) table of anchor indices for every grid cell."""
        s = self.structure
        ii, jj = np.meshgrid(
            np.arange(s.l + 1), np.arange(2 * s.z_max), indexing="ij"
        )
        return self.anchor_index(ii, jj)


class ZoptDetector:
    """Grid lookup plus at most four distance evaluations per decision."""

    def __init__(self, z):
        if isinstance(z, ZOptDetectorState):
            self.state = z
        else:
            self.state = ZOptDetectorState.from_constellation(z)

    def detect_batch(self, Ys: np.ndarray):
        est = rough_estimate_batch(np.asarray(Ys, dtype=np.complex128))
        return self.detect_points(est)

    def detect_points(self, est: np.ndarray):
        """Detect from raw (unnormalized) direction estimates, batched."""
        s = self.state.structure
        theta_arr = self.state.theta
        theta_z, phi_z = _angles_of_raw(est)
        n = len(est)
        wrap = phi_z >= TWO_PI
        phi_z = np.where(wrap, np.maximum(phi_z - TWO_PI, 0.0), phi_z)
        j0 = np.floor(phi_z / (math.pi / s.z_max)).astype(np.int64)
        j0 = np.clip(j0, 0, 2 * s.z_max - 1)
        i = np.searchsorted(theta_arr, theta_z, side="left").astype(np.int64)
        cand = np.clip(i[:, None] + np.array([-1, 0, 1, 2]), 1, s.l)
        dup = np.zeros_like(cand, dtype=bool)
        dup[:, 1:] = cand[:, 1:] == cand[:, :-1]
        dphi = _candidate_azimuth_offset(
            cand, j0[:, None], s.z_max, s.l, s.half_layers, phi_z[:, None]
        )
        th_c = theta_arr[cand - 1]
        half = 0.5 * (th_c - theta_z[:, None])
        rad = np.sin(half) ** 2 + (
            np.sin(th_c) * np.sin(theta_z[:, None]) * np.sin(dphi / 2.0) ** 2
        )
        d = 2.0 * np.sqrt(np.maximum(rad, 0.0))
        d[dup] = np.inf
        anchors = self.state.anchor_index(cand, j0[:, None])
        dmin = d.min(axis=1)
        best = np.where(d == dmin[:, None], anchors, np.iinfo(np.int64).max).min(axis=1)
        evals = (~dup).sum(axis=1).astype(np.int64)
        comps = np.full(n, _region_comparisons(s.l), dtype=np.int64) + evals - 1
        return best - 1, evals, comps

    def detect(self, Y) -> DetectionResult:
        idx, evals, comps = self.detect_batch(_as_batch(Y))
        return DetectionResult(int(idx[0]), int(evals[0]), int(comps[0]))


# ---------------------------------------------------------------------------
# functional entry points


def _as_batch(Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.complex128)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2 or Y.shape[0] != 2 or Y.shape[1] < 1:
        raise InvalidInputError("observation must be a 2xN matrix")
    if not np.any(Y):
        raise DegenerateInputError("observation is zero")
    return Y[None, :, :]


def glrt_detect(Y, constellation: Constellation) -> DetectionResult:
    return GlrtDetector(constellation).detect(Y)


def sopt_detect(Y, nn: NearestNeighborIndex) -> DetectionResult:
    est = rough_estimate_batch(_as_batch(Y))
    idx, _, evals, comps = nn.query(_bloch_of_raw(est))
    return DetectionResult(int(idx[0]), int(evals[0]), int(comps[0]))


def zopt_detect(Y, state, constellation: Constellation | None = None) -> DetectionResult:
    """Detect with a prebuilt layered-detector state.

    `state` may be a ZoptDetector, a ZOptDetectorState or a ZOptConstellation.
    When `constellation` is given its size is validated against the state.
    """
    det = state if isinstance(state, ZoptDetector) else ZoptDetector(state)
    if constellation is not None and len(constellation) != det.state.C:
        raise InvalidInputError(
            f"state is for C={det.state.C} but constellation has {len(constellation)}"
        )
    return det.detect(Y)
