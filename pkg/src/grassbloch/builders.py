"""Constellation builders: sphere-packing based and the structured baselines.

The packing route (build_s_opt / build_man_opt) converts any point set on the
unit sphere into codewords and inherits its minimum distance exactly, halved.
The remaining builders are structured maps from symbol sets or grids onto
G(2,1): an exponential map of complex symbols, a cell-partition map, and a
measure-preserving hypercube map.
"""

from __future__ import annotations

import math
import numpy as np

from .errors import InvalidInputError
from .geometry import (
    Codeword,
    Constellation,
    canonicalize_array,
    min_chordal_distance_array,
)
from .packing import PackingConfig, PackingSet, optimize_packing


def _constellation_from_array(points, method: str, B=None) -> Constellation:
    return Constellation([Codeword(p[0], p[1]) for p in np.asarray(points)], method, B)


# ---------------------------------------------------------------------------
# sphere-packing constructions


def packing_to_codewords(points3: np.ndarray) -> np.ndarray:
    """Map unit sphere points to codewords through their spherical angles."""
    pts = np.asarray(points3, dtype=np.float64)
    theta = np.arccos(np.clip(pts[:, 2], -1.0, 1.0))
    phi = np.arctan2(pts[:, 1], pts[:, 0]) % (2.0 * math.pi)
    half = theta / 2.0
    out = np.empty((len(pts), 2), dtype=np.complex128)
    out[:, 0] = np.cos(half)
    out[:, 1] = np.sin(half) * np.exp(1j * phi)
    return out


def build_s_opt(p: PackingSet, method: str = "s-opt") -> Constellation:
    """Codewords whose Bloch points are exactly the packing's points."""
    points = packing_to_codewords(p.points)
    return _constellation_from_array(points, method)


def build_man_opt(C: int, seed: int = 0, config: PackingConfig | None = None) -> Constellation:
    """Maximin-optimized constellation.

    On G(2,1) maximizing the minimum chordal distance is the same problem as
    maximin point dispersion on the Bloch sphere, so the numerical work runs
    there and the result is converted exactly.
    """
    packing = optimize_packing(C, seed=seed, config=config)
    return build_s_opt(packing, method="man-opt")


# ---------------------------------------------------------------------------
# exponential map


def build_exp_map(symbols) -> Constellation:
    """Map complex symbols v with |v| < pi/2 to (cos|v|, -(sin|v|/|v|) v)."""
    v = np.asarray(symbols, dtype=np.complex128)
    rho = np.abs(v)
    if np.any(rho >= math.pi / 2.0):
        raise InvalidInputError("symbol magnitudes must stay below pi/2 to keep the map invertible")
    sinc = np.where(rho > 0.0, np.sin(rho) / np.where(rho > 0, rho, 1.0), 1.0)
    points = np.column_stack([np.cos(rho), -sinc * v])
    points = canonicalize_array(points)
    return _constellation_from_array(points, "exp-map")


def psk_symbols(n: int, radius: float) -> np.ndarray:
    """n equally spaced symbols on a circle of the given radius."""
    return radius * np.exp(2j * math.pi * np.arange(n) / n)


def qam_symbols(n: int, scale: float) -> np.ndarray:
    """Square grid of n symbols (n must be a perfect square) at the given scale."""
    m = round(math.sqrt(n))
    if m * m != n:
        raise InvalidInputError(f"{n} is not a perfect square")
    levels = scale * (2.0 * np.arange(m) - (m - 1))
    re, im = np.meshgrid(levels, levels, indexing="ij")
    return (re + 1j * im).ravel()


def _sweep_scale(make_symbols, lo: float, hi: float, steps: int = 200) -> float:
    """Grid-plus-refine search for the scale that maximizes minimum distance."""
    best_s, best_d = lo, -1.0

    def probe(s):
        nonlocal best_s, best_d
        pts = canonicalize_array(_exp_map_points(make_symbols(s)))
        d = min_chordal_distance_array(pts)
        if d > best_d:
            best_s, best_d = s, d

    for s in np.linspace(lo, hi, steps):
        probe(s)
    span = (hi - lo) / (steps - 1)
    for _ in range(30):
        span *= 0.6
        for s in (best_s - span, best_s + span):
            if lo <= s <= hi:
                probe(s)
    return best_s


def _exp_map_points(v: np.ndarray) -> np.ndarray:
    rho = np.abs(v)
    sinc = np.where(rho > 0.0, np.sin(rho) / np.where(rho > 0, rho, 1.0), 1.0)
    return np.column_stack([np.cos(rho), -sinc * v])


def exp_map_psk(C: int, radius: float | None = None) -> Constellation:
    """PSK symbols on one ring; the ring radius is grid-searched when absent."""
    if radius is None:
        radius = _sweep_scale(lambda r: psk_symbols(C, r), 1e-3, math.pi / 2.0 - 1e-9)
    return build_exp_map(psk_symbols(C, radius))


def exp_map_qam(C: int, scale: float | None = None) -> Constellation:
    """Square-grid symbols scaled to stay inside the invertibility disk."""
    m = round(math.sqrt(C))
    if m * m != C:
        raise InvalidInputError(f"square-grid symbols need a square constellation size, not {C}")
    s_max = (math.pi / 2.0 - 1e-9) / (math.sqrt(2.0) * (m - 1)) if m > 1 else 0.5
    if scale is None:
        scale = _sweep_scale(lambda s: qam_symbols(C, s), s_max * 1e-3, s_max)
    return build_exp_map(qam_symbols(C, scale))


def exp_map_constellation(B: int, symbols: str = "auto") -> Constellation:
    """2^B-point exponential-map constellation; grid symbols when B is even."""
    C = 2**B
    if symbols == "auto":
        symbols = "qam" if B % 2 == 0 and B >= 2 else "psk"
    if symbols == "qam":
        return exp_map_qam(C)
    if symbols == "psk":
        return exp_map_psk(C)
    raise InvalidInputError(f"unknown symbol family {symbols!r}")


# ---------------------------------------------------------------------------
# inverse normal CDF (needed by the two grid-based maps)

_NQ_A = (
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
_NQ_B = (
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
    2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_NQ_C = (
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
)
_NQ_D = (
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
    1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_NQ_E = (
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
)
_NQ_F = (
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
    7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _poly(coeffs, x):
    acc = np.zeros_like(x) + coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


def normal_quantile(p):
    """Inverse standard normal CDF via rational approximations.

    Absolute error is far below 1e-9 over (0, 1); inputs outside the open
    interval are rejected.
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise InvalidInputError("quantile argument must lie strictly inside (0, 1)")
    q = p - 0.5
    out = np.empty_like(p)
    central = np.abs(q) <= 0.425
    if np.any(central):
        r = 0.180625 - q[central] * q[central]
        out[central] = q[central] * _poly(_NQ_A, r) / _poly(_NQ_B, r)
    tail = ~central
    if np.any(tail):
        r = np.where(q[tail] < 0.0, p[tail], 1.0 - p[tail])
        r = np.sqrt(-np.log(r))
        near = r <= 5.0
        val = np.empty_like(r)
        val[near] = _poly(_NQ_C, r[near] - 1.6) / _poly(_NQ_D, r[near] - 1.6)
        val[~near] = _poly(_NQ_E, r[~near] - 5.0) / _poly(_NQ_F, r[~near] - 5.0)
        out[tail] = np.where(q[tail] < 0.0, -val, val)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# cell-partition map


def cube_split_map(a, cell: int) -> np.ndarray:
    """Map a point of (0,1)^2 into the given cell (1 or 2) of G(2,1).

    The grid point becomes a complex value through the standard normal
    quantile, shrinks into the unit disk, and lands next to the cell's basis
    vector.
    """
    a = np.asarray(a, dtype=np.float64)
    if cell not in (1, 2):
        raise InvalidInputError("cell must be 1 or 2 when T = 2")
    w = complex(normal_quantile(a[0]), normal_quantile(a[1]))
    if w == 0:
        t = 0.0j
    else:
        t = math.sqrt(math.tanh(abs(w) ** 2 / 4.0)) * (w / abs(w))
    denom = math.sqrt(1.0 + abs(t) ** 2)
    if cell == 1:
        vec = np.array([1.0, t], dtype=np.complex128)
    else:
        vec = np.array([t, 1.0], dtype=np.complex128)
    return vec / denom


def _half_odd_grid(bits: int) -> np.ndarray:
    """Odd multiples of 1/2^(bits+1): the centers of 2^bits equal cells of (0,1)."""
    denom = 2.0 ** (bits + 1)
    return (2.0 * np.arange(2**bits) + 1.0) / denom


def build_cube_split(B_total: int) -> Constellation:
    """Cell-partition constellation with 2^B_total codewords (T = 2).

    One bit picks the cell; the remaining bits split as evenly as possible
    over the two real grid dimensions (the extra bit goes to the first). With
    a single bit the grid is empty and the two cell centers are emitted.
    """
    if B_total < 1:
        raise InvalidInputError("need at least one bit")
    if B_total == 1:
        return _constellation_from_array(
            np.array([[1.0, 0.0], [0.0, 1.0]], dtype=np.complex128), "cube-split", 1
        )
    b1 = math.ceil((B_total - 1) / 2)
    b2 = (B_total - 1) // 2
    rows = []
    for cell in (1, 2):
        for a1 in _half_odd_grid(b1):
            for a2 in _half_odd_grid(b2):
                rows.append(cube_split_map((a1, a2), cell))
    points = canonicalize_array(np.asarray(rows))
    return _constellation_from_array(points, "cube-split", B_total)


# ---------------------------------------------------------------------------
# measure-preserving hypercube map


def ball_shrink_factor(t):
    """radial factor sqrt(1 - exp(-t^2)) / t mapping complex normals into the disk.

    Finite and smooth at t -> 0 where it tends to 1.
    """
    t = np.asarray(t, dtype=np.float64)
    safe = np.where(t > 0.0, t, 1.0)
    out = np.sqrt(-np.expm1(-safe * safe)) / safe
    return np.where(t > 0.0, out, 1.0)


def build_grass_lattice(B_r: int, alpha: float = 1e-2) -> Constellation:
    """Uniform-measure constellation of 2^(2*B_r) codewords (T = 2).

    Grid points of [alpha, 1-alpha]^2 map through the quantile of a complex
    normal with unit total variance, then shrink into the unit disk, and the
    first coordinate is completed to unit norm.
    """
    if not 0.0 < alpha < 0.5:
        raise InvalidInputError(f"alpha must lie in (0, 0.5), got {alpha!r}")
    if B_r < 1:
        raise InvalidInputError("need at least one bit per real dimension")
    p = np.arange(2**B_r, dtype=np.float64)
    grid = alpha + p * (1.0 - 2.0 * alpha) / (2**B_r - 1)
    a, b = np.meshgrid(grid, grid, indexing="ij")
    # quantile of Normal(0, 1/2) per real dimension
    z = (normal_quantile(a.ravel()) + 1j * normal_quantile(b.ravel())) / math.sqrt(2.0)
    w = z * ball_shrink_factor(np.abs(z))
    points = np.column_stack([np.sqrt(np.maximum(0.0, 1.0 - np.abs(w) ** 2)), w])
    return _constellation_from_array(points, "grass-lattice", 2 * B_r)
