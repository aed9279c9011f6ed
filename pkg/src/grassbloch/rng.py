"""Counter-based splittable random numbers.

Every draw is a pure function of (seed, stream words..., counter), built on the
splitmix64 finalizer. Trials, SNR points and draw slots each get their own
substream, so results do not depend on batch size, worker count or evaluation
order. The scalar path uses Python integers masked to 64 bits; the vector path
uses wrapping uint64 numpy arrays. Both produce identical values.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAM_SALT = 0xD1B54A32D192ED03

_U_GOLDEN = np.uint64(_GOLDEN)
_U_SALT = np.uint64(_STREAM_SALT)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# 2**-53: maps the top 53 bits of a uint64 to [0, 1)
_INV53 = 1.0 / float(1 << 53)


def mix64(x: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def _mix64_vec(x: np.ndarray) -> np.ndarray:
    x = x + _U_GOLDEN
    x = (x ^ (x >> _U30)) * _M1
    x = (x ^ (x >> _U27)) * _M2
    return x ^ (x >> _U31)


def stream_key(seed: int, *words: int) -> int:
    """Derive a 64-bit substream key from a seed and stream coordinates."""
    key = mix64(seed & _MASK)
    for w in words:
        key = mix64((key ^ ((w & _MASK) * _STREAM_SALT & _MASK)) & _MASK)
    return key


def stream_key_vec(seed: int, *words) -> np.ndarray:
    """Vectorized stream_key; each of `words` may be an int or uint64 array.

    Matches stream_key bit for bit: leading integer words fold through the
    exact scalar path and only array words switch to wrapping uint64 math.
    """
    key = mix64(seed & _MASK)
    out = None
    for w in words:
        if out is None and isinstance(w, (int, np.integer)):
            key = mix64((key ^ ((int(w) & _MASK) * _STREAM_SALT & _MASK)) & _MASK)
        else:
            w_arr = np.asarray(w, dtype=np.uint64)
            base = np.uint64(key) if out is None else out
            out = _mix64_vec(base ^ (w_arr * _U_SALT))
    return np.uint64(key) if out is None else out


def raw(key, counter) -> np.ndarray:
    """64-bit output for (key, counter); both may be uint64 arrays."""
    k = np.asarray(key, dtype=np.uint64)
    c = np.asarray(counter, dtype=np.uint64)
    return _mix64_vec(k + c * _U_GOLDEN)


def uniform(key, counter) -> np.ndarray:
    """Uniform draw in [0, 1) for (key, counter)."""
    return (raw(key, counter) >> _U11).astype(np.float64) * _INV53


def uniform_open(key, counter) -> np.ndarray:
    """Uniform draw in (0, 1]; safe as a log() argument."""
    return ((raw(key, counter) >> _U11).astype(np.float64) + 1.0) * _INV53


def complex_normal(key, counter, variance=1.0) -> np.ndarray:
    """Circularly symmetric complex normal draws via Box-Muller.

    One draw consumes counters `counter` and `counter + 1`. The total variance
    (real plus imaginary part) of each sample equals `variance`.
    """
    u1 = uniform_open(key, counter)
    c2 = np.asarray(counter, dtype=np.uint64) + np.uint64(1)
    u2 = uniform(key, c2)
    r = np.sqrt(-variance * np.log(u1))
    ang = (2.0 * np.pi) * u2
    return r * np.cos(ang) + 1j * (r * np.sin(ang))


def uniform_index(key, counter, n: int) -> np.ndarray:
    """Uniform integer draw in [0, n)."""
    idx = np.floor(uniform(key, counter) * n).astype(np.int64)
    # floor(u * n) can only reach n through rounding; clamp for safety.
    return np.minimum(idx, n - 1)
