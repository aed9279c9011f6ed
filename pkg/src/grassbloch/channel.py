"""Block-Rayleigh Monte Carlo engine with reproducible substreams.

Each trial draws its symbol, channel and noise from a substream keyed by
(seed, SNR index, trial index), so results are bitwise independent of chunk
size, thread count and of which detectors consume the stream. SNR is defined
as 1 / sigma^2: codewords have unit norm before the sqrt(T) transmit scaling
and sigma^2 is the per-complex-entry noise variance.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng
from .detectors import GlrtDetector, SoptDetector, ZoptDetector
from .errors import InvalidInputError
from .zopt import ZOptConstellation

DETECTOR_TAGS = ("glrt", "sopt", "zopt")

_THREADS_ENV = "GRASSBLOCH_THREADS"


@dataclass(frozen=True)
class ChannelSample:
    """One block-fading draw: channel row H (1 x N) and noise W (2 x N)."""

    H: np.ndarray
    W: np.ndarray
    sigma2: float


def sample_channel(key: int, N: int, sigma2: float) -> ChannelSample:
    """Channel and noise for one trial substream key."""
    h_ctr = 1 + 2 * np.arange(N, dtype=np.uint64)
    H = rng.complex_normal(key, h_ctr).reshape(1, N)
    w_ctr = 1 + 2 * N + 2 * np.arange(2 * N, dtype=np.uint64)
    W = rng.complex_normal(key, w_ctr, variance=sigma2).reshape(2, N)
    return ChannelSample(H=H, W=W, sigma2=sigma2)


def transmit(x, ch: ChannelSample) -> np.ndarray:
    """Received block Y = sqrt(2) x H + W for a unit-norm codeword x."""
    xv = np.asarray(getattr(x, "vector", x), dtype=np.complex128).reshape(2, 1)
    return math.sqrt(2.0) * xv @ ch.H + ch.W


def make_detector(tag: str, x, leaf_size: int = 8):
    """Instantiate a detector for a constellation (or layered constellation)."""
    constellation = x.constellation if isinstance(x, ZOptConstellation) else x
    if tag == "glrt":
        return GlrtDetector(constellation)
    if tag == "sopt":
        return SoptDetector(constellation, leaf_size=leaf_size)
    if tag == "zopt":
        if not isinstance(x, ZOptConstellation):
            raise InvalidInputError("the layered detector needs a layered constellation")
        return ZoptDetector(x)
    raise InvalidInputError(f"unknown detector {tag!r}; expected one of {DETECTOR_TAGS}")


@dataclass(frozen=True)
class SerCurve:
    """Per-SNR error counts and detector operation counters for one sweep."""

    snr_db: tuple
    trials: int
    errors: tuple
    ser: tuple
    mean_distance_evals: tuple
    mean_comparisons: tuple
    seed: int
    detector: str
    N: int
    method: str
    C: int


def _thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get(_THREADS_ENV, "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _effective_chunk(chunk: int, C: int, N: int) -> int:
    cap = max(256, (1 << 22) // max(C, 4 * N))
    return max(1, min(chunk, cap))


def _trial_batch(seed: int, snr_index: int, lo: int, hi: int, N: int,
                 sigma2: float, points: np.ndarray):
    """Symbols and received blocks for trials [lo, hi) of one SNR point."""
    C = len(points)
    keys = rng.stream_key_vec(seed, snr_index, np.arange(lo, hi, dtype=np.uint64))
    sym = rng.uniform_index(keys, 0, C)
    h_ctr = 1 + 2 * np.arange(N, dtype=np.uint64)
    H = rng.complex_normal(keys[:, None], h_ctr[None, :])
    w_ctr = 1 + 2 * N + 2 * np.arange(2 * N, dtype=np.uint64).reshape(2, N)
    W = rng.complex_normal(keys[:, None, None], w_ctr[None, :, :], variance=sigma2)
    Y = math.sqrt(2.0) * points[sym][:, :, None] * H[:, None, :] + W
    return sym, Y


def _run_point(detectors, points, seed, snr_index, sigma2, trials, N, chunk, threads):
    """One SNR point: error and counter totals per detector, plus mismatches.

    Mismatches count trials where a detector disagrees with the first one in
    the list. Chunks are independent substream ranges, so the reduction is a
    plain sum and the outcome does not depend on scheduling.
    """
    n_det = len(detectors)
    starts = list(range(0, trials, chunk))

    def work(lo):
        hi = min(lo + chunk, trials)
        sym, Y = _trial_batch(seed, snr_index, lo, hi, N, sigma2, points)
        errors = np.zeros(n_det, dtype=np.int64)
        evals = np.zeros(n_det, dtype=np.int64)
        comps = np.zeros(n_det, dtype=np.int64)
        max_evals = np.zeros(n_det, dtype=np.int64)
        mismatch = np.zeros(n_det, dtype=np.int64)
        ref = None
        for k, det in enumerate(detectors):
            idx, ev, cp = det.detect_batch(Y)
            errors[k] = int(np.count_nonzero(idx != sym))
            evals[k] = int(ev.sum())
            comps[k] = int(cp.sum())
            max_evals[k] = int(ev.max()) if len(ev) else 0
            if ref is None:
                ref = idx
            else:
                mismatch[k] = int(np.count_nonzero(idx != ref))
        return errors, evals, comps, max_evals, mismatch

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(lo) for lo in starts]
    errors = sum(p[0] for p in parts)
    evals = sum(p[1] for p in parts)
    comps = sum(p[2] for p in parts)
    max_evals = np.max([p[3] for p in parts], axis=0)
    mismatch = sum(p[4] for p in parts)
    return errors, evals, comps, max_evals, mismatch


def run_ser(x, detector, snr_db, trials: int, N: int = 1, seed: int = 0,
            chunk: int = 8192, threads: int | None = None) -> SerCurve:
    """Symbol error rate sweep, bitwise reproducible from its arguments."""
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    if N < 1:
        raise InvalidInputError("need at least one receive antenna")
    constellation = x.constellation if isinstance(x, ZOptConstellation) else x
    tag = detector if isinstance(detector, str) else type(detector).__name__
    det = make_detector(detector, x) if isinstance(detector, str) else detector
    points = constellation.array
    snr_db = [float(s) for s in snr_db]
    chunk = _effective_chunk(chunk, len(points), N)
    threads = _thread_count(threads)
    errors, mean_ev, mean_cp = [], [], []
    for snr_index, snr in enumerate(snr_db):
        sigma2 = 10.0 ** (-snr / 10.0)
        err, ev, cp, _, _ = _run_point(
            [det], points, seed, snr_index, sigma2, trials, N, chunk, threads
        )
        errors.append(int(err[0]))
        mean_ev.append(ev[0] / trials)
        mean_cp.append(cp[0] / trials)
    return SerCurve(
        snr_db=tuple(snr_db),
        trials=trials,
        errors=tuple(errors),
        ser=tuple(e / trials for e in errors),
        mean_distance_evals=tuple(mean_ev),
        mean_comparisons=tuple(mean_cp),
        seed=seed,
        detector=tag,
        N=N,
        method=constellation.method,
        C=len(constellation),
    )


@dataclass(frozen=True)
class BenchReport:
    """Counter summary for one detector over a shared trial stream."""

    detector: str
    trials: int
    errors: int
    mean_distance_evals: float
    max_distance_evals: int
    mean_comparisons: float
    mismatches_vs_first: int


def bench_detectors(x, detectors, trials: int, N: int = 1, seed: int = 0,
                    snr_db: float = 10.0, chunk: int = 8192,
                    threads: int | None = None) -> list[BenchReport]:
    """Run the identical trial stream through every detector and compare.

    The first detector is the reference for the mismatch column; with
    equivalent detectors that column stays zero on every trial.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    constellation = x.constellation if isinstance(x, ZOptConstellation) else x
    dets = [make_detector(d, x) if isinstance(d, str) else d for d in detectors]
    tags = [d if isinstance(d, str) else type(d).__name__ for d in detectors]
    points = constellation.array
    sigma2 = 10.0 ** (-float(snr_db) / 10.0)
    chunk = _effective_chunk(chunk, len(points), N)
    err, ev, cp, max_ev, mism = _run_point(
        dets, points, seed, 0, sigma2, trials, N, chunk, _thread_count(threads)
    )
    return [
        BenchReport(
            detector=tags[k],
            trials=trials,
            errors=int(err[k]),
            mean_distance_evals=ev[k] / trials,
            max_distance_evals=int(max_ev[k]),
            mean_comparisons=cp[k] / trials,
            mismatches_vs_first=int(mism[k]),
        )
        for k in range(len(dets))
    ]
