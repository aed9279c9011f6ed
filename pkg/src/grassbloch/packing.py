"""Point sets on the unit sphere that maximize the minimum pairwise distance.

Exact closed-form configurations are available for C in {2, 3, 4, 6, 8, 12};
everything else goes through a two-phase maximin optimizer or is loaded from a
packing table file (plain text, one "x y z" triple per line, '#' comments,
optional leading point-count header).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import FormatError, InvalidInputError, UnsupportedError
from .geometry import min_euclidean_distance_array

EXACT_COUNTS = (2, 3, 4, 6, 8, 12)

_GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class PackingSet:
    """Unit vectors on the sphere plus their cached minimum pairwise distance."""

    points: np.ndarray
    source: str  # exact | optimized | file
    min_distance: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 2:
            raise InvalidInputError("packing needs an (n, 3) array with n >= 2")
        norms = np.linalg.norm(pts, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise InvalidInputError("packing points must be unit vectors")
        recomputed = min_euclidean_distance_array(pts)
        if abs(recomputed - self.min_distance) > 1e-12:
            raise InvalidInputError(
                f"cached min_distance {self.min_distance!r} != recomputed {recomputed!r}"
            )
        if recomputed <= 1e-9:
            raise InvalidInputError("packing contains duplicate points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def C(self) -> int:
        return len(self.points)


def _make(points: np.ndarray, source: str) -> PackingSet:
    points = np.asarray(points, dtype=np.float64)
    points = points / np.linalg.norm(points, axis=1)[:, None]
    return PackingSet(points, source, min_euclidean_distance_array(points))


def _antiprism_layers(theta: float, count: int, offset: float) -> np.ndarray:
    phis = offset + 2.0 * np.pi * np.arange(count) / count
    s, c = math.sin(theta), math.cos(theta)
    return np.column_stack([s * np.cos(phis), s * np.sin(phis), np.full(count, c)])


def exact_packing(C: int) -> PackingSet:
    """Closed-form optimal configuration for C in {2, 3, 4, 6, 8, 12}."""
    if C == 2:
        pts = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    elif C == 3:
        phis = 2.0 * np.pi * np.arange(3) / 3.0
        pts = np.column_stack([np.cos(phis), np.sin(phis), np.zeros(3)])
    elif C == 4:
        pts = np.array(
            [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
        ) / math.sqrt(3.0)
    elif C == 6:
        pts = np.array(
            [
                [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0], [0.0, -1.0, 0.0],
                [0.0, 0.0, 1.0], [0.0, 0.0, -1.0],
            ]
        )
    elif C == 8:
        # square antiprism; the tilt angle solves the in-layer/diagonal equality
        theta = math.atan(math.sqrt(2.0 * math.sqrt(2.0)))
        top = _antiprism_layers(theta, 4, 0.0)
        bottom = _antiprism_layers(math.pi - theta, 4, math.pi / 4.0)
        pts = np.vstack([top, bottom])
    elif C == 12:
        g = _GOLDEN_RATIO
        base = []
        for a in (-1.0, 1.0):
            for b in (-g, g):
                base.extend([[0.0, a, b], [a, b, 0.0], [b, 0.0, a]])
        pts = np.asarray(base) / math.sqrt(1.0 + g * g)
    else:
        raise UnsupportedError(
            f"no closed form for C={C}; use optimize_packing or load_packing"
        )
    return _make(pts, "exact")


@dataclass(frozen=True)
class PackingConfig:
    """Optimizer settings; the defaults are tuned for C up to a few thousand.

    Phase 1 follows the gradient of a softened minimum (log-sum-exp of negative
    pairwise distances) while the temperature decays geometrically from
    `eps_start` to `eps_final`, both as fractions of the running minimum
    distance. Phase 2 polishes with direct maximin ascent: every point whose
    nearest neighbor sits within `active_slack` of the global minimum moves
    away from its near-critical neighbors, and a step is kept only when the
    global minimum improves.
    """

    starts: int = 4
    phase1_iters: int = 500
    eps_start: float = 0.5
    eps_final: float = 0.02
    step_scale: float = 0.5
    phase2_sweeps: int = 2000
    phase2_step: float = 0.05
    min_step: float = 1e-13
    init_noise: float = 0.25


def fibonacci_points(C: int) -> np.ndarray:
    """Deterministic well-spread start: golden-angle spiral on the sphere."""
    i = np.arange(C, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / C
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = (2.0 * np.pi / (_GOLDEN_RATIO * _GOLDEN_RATIO)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _pairwise_distances(points: np.ndarray) -> np.ndarray:
    dots = np.clip(points @ points.T, -1.0, 1.0)
    np.fill_diagonal(dots, 1.0)
    return np.sqrt(np.maximum(0.0, 2.0 - 2.0 * dots))


def softmin_objective(points: np.ndarray, eps: float) -> tuple[float, int]:
    """Smoothed minimum distance and the number of pairs it evaluated.

    Returns -eps * log(sum over pairs of exp(-d_ij / eps)), a lower bound on
    the true minimum that converges to it as eps -> 0. The pair count is
    C * (C - 1) / 2 by construction: the objective touches every pair.
    """
    n = len(points)
    d = _pairwise_distances(points)
    iu = np.triu_indices(n, k=1)
    vals = d[iu]
    dmin = vals.min()
    total = np.exp(-(vals - dmin) / eps).sum()
    return float(dmin - eps * math.log(total)), n * (n - 1) // 2


def _project_tangent(points: np.ndarray, g: np.ndarray) -> np.ndarray:
    return g - np.sum(g * points, axis=1)[:, None] * points


def _renormalize(points: np.ndarray) -> np.ndarray:
    return points / np.linalg.norm(points, axis=1)[:, None]


def _softmin_phase(points: np.ndarray, cfg: PackingConfig) -> np.ndarray:
    n = len(points)
    decay = (cfg.eps_final / cfg.eps_start) ** (1.0 / max(cfg.phase1_iters - 1, 1))
    d = _pairwise_distances(points)
    np.fill_diagonal(d, np.inf)
    eps = cfg.eps_start * float(d.min())
    for _ in range(cfg.phase1_iters):
        d = _pairwise_distances(points)
        np.fill_diagonal(d, np.inf)
        dmin = float(d.min())
        w = np.exp(-(d - dmin) / eps)
        np.fill_diagonal(w, 0.0)
        w /= w.sum()
        # ascent direction of the softened minimum: repel along near-critical pairs
        inv = np.where(d > 0, 1.0 / d, 0.0)
        coef = w * inv
        g = points * coef.sum(axis=1)[:, None] - coef @ points
        g = _project_tangent(points, g)
        gmax = float(np.abs(g).max())
        if gmax > 0:
            points = _renormalize(points + (cfg.step_scale * eps / gmax) * g)
        eps *= decay
    return points


def _maximin_polish(points: np.ndarray, cfg: PackingConfig) -> np.ndarray:
    """Direct maximin ascent: push points away from their near-critical neighbors.

    The active-pair slack tracks the step size, so as steps shrink only the
    pairs that truly attain the minimum keep steering the configuration.
    A step is kept only when the global minimum improves.
    """
    step = cfg.phase2_step
    d = _pairwise_distances(points)
    np.fill_diagonal(d, np.inf)
    best_f = float(d.min())
    best_points = points.copy()
    for _ in range(cfg.phase2_sweeps):
        if step < cfg.min_step:
            break
        d = _pairwise_distances(best_points)
        np.fill_diagonal(d, np.inf)
        f = float(d.min())
        nn = d.min(axis=1)
        slack = min(0.05, max(2.0 * step, 1e-12))
        active = nn <= f * (1.0 + slack)
        near = d <= (nn * (1.0 + slack))[:, None]
        weight = np.where(np.isfinite(d) & near,
                          (nn * (1.0 + slack))[:, None] - d, 0.0)
        inv = np.where(weight > 0, weight / np.maximum(d, 1e-15), 0.0)
        g = best_points * inv.sum(axis=1)[:, None] - inv @ best_points
        g = _project_tangent(best_points, g)
        norms = np.linalg.norm(g, axis=1)
        move = active & (norms > 0)
        if not np.any(move):
            step *= 0.5
            continue
        g[move] /= norms[move][:, None]
        g[~move] = 0.0
        trial = _renormalize(best_points + (step * f) * g)
        dt = _pairwise_distances(trial)
        np.fill_diagonal(dt, np.inf)
        ft = float(dt.min())
        if ft > best_f:
            best_points = trial
            best_f = ft
            step = min(step * 1.3, cfg.phase2_step)
        else:
            step *= 0.5
    return best_points


def optimize_packing(C: int, seed: int = 0, config: PackingConfig | None = None) -> PackingSet:
    """Maximin point placement for any C >= 2, deterministic in (C, seed, config).

    Non-convergence is not an error: the best configuration found is returned
    and its achieved minimum distance is recorded on the result.
    """
    if C < 2:
        raise InvalidInputError("need at least two points")
    cfg = config or PackingConfig()
    if C == 2:
        return _make(np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]), "optimized")
    base = fibonacci_points(C)
    nominal = math.sqrt(8.0 * math.pi / (math.sqrt(3.0) * C))
    best_points, best_f = None, -1.0
    for start in range(max(cfg.starts, 1)):
        key = rng.stream_key(seed, 0x5048, start)
        noise = rng.complex_normal(key, 2 * np.arange(3 * C, dtype=np.uint64)).real
        noise = noise.reshape(C, 3) * (cfg.init_noise * nominal)
        pts = _renormalize(base + _project_tangent(base, noise))
        pts = _softmin_phase(pts, cfg)
        pts = _maximin_polish(pts, cfg)
        f = min_euclidean_distance_array(pts)
        if f > best_f:
            best_points, best_f = pts, f
    return _make(best_points, "optimized")


def load_packing(path) -> PackingSet:
    """Read a packing table file and validate it.

    Entries may deviate from unit norm by at most 1e-6 and are renormalized;
    larger deviations, duplicate points, parse failures and point-count
    mismatches against an optional integer header are format errors carrying
    the offending line number.
    """
    rows = []
    header = None
    with open(path) as fh:
        for lineno, raw_line in enumerate(fh, start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) == 1 and header is None and not rows:
                try:
                    header = int(parts[0])
                    continue
                except ValueError:
                    raise FormatError("expected integer header or x y z triple",
                                      path=path, line=lineno) from None
            if len(parts) != 3:
                raise FormatError(f"expected 3 values, got {len(parts)}",
                                  path=path, line=lineno)
            try:
                vec = [float(p) for p in parts]
            except ValueError:
                raise FormatError(f"non-numeric value in {parts!r}",
                                  path=path, line=lineno) from None
            norm = math.sqrt(sum(v * v for v in vec))
            if abs(norm - 1.0) > 1e-6:
                raise FormatError(f"point norm {norm!r} deviates from 1 by more than 1e-6",
                                  path=path, line=lineno)
            rows.append([v / norm for v in vec])
    if header is not None and header != len(rows):
        raise FormatError(f"header says {header} points but file holds {len(rows)}",
                          path=path, line=None)
    if len(rows) < 2:
        raise FormatError("packing needs at least two points", path=path, line=None)
    pts = np.asarray(rows, dtype=np.float64)
    if min_euclidean_distance_array(pts) <= 1e-9:
        raise FormatError("duplicate points in packing file", path=path, line=None)
    return PackingSet(pts, "file", min_euclidean_distance_array(pts))


def save_packing(path, packing: PackingSet) -> None:
    """Write a PackingSet in the text format accepted by load_packing."""
    with open(path, "w") as fh:
        fh.write(f"# {packing.C} points, min distance {packing.min_distance:.12f}\n")
        fh.write(f"{packing.C}\n")
        for p in packing.points:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
