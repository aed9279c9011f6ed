"""On-disk formats: constellation JSON, result CSV/JSON, and run configs.

Every file this package writes carries the tool version, a hash of the
generating configuration and the seed, so any figure can be reproduced from
its own header. Formats are versioned and readers reject files from a future
major version.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .channel import BenchReport, SerCurve
from .errors import FormatError, InvalidInputError
from .geometry import Codeword, Constellation
from .zopt import ZOptConstellation, zopt_structure

FORMAT_VERSION = 1


def config_hash(obj) -> str:
    """Short stable digest of a JSON-serializable configuration."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _check_version(data, path):
    v = data.get("format_version", 1)
    if not isinstance(v, int) or v > FORMAT_VERSION:
        raise FormatError(f"format_version {v!r} is newer than supported {FORMAT_VERSION}",
                          path=path)


# ---------------------------------------------------------------------------
# constellation JSON


def constellation_to_dict(x, seed=None, extra_config=None) -> dict:
    """JSON payload for a Constellation or ZOptConstellation."""
    z = x if isinstance(x, ZOptConstellation) else None
    c = z.constellation if z is not None else x
    b = c.B
    data = {
        "format_version": FORMAT_VERSION,
        "tool_version": __version__,
        "method": c.method,
        "B": int(b) if float(b).is_integer() else float(b),
        "T": 2,
        "M": 1,
        "seed": seed,
        "config_hash": config_hash({"method": c.method, "B": b, "seed": seed,
                                    "extra": extra_config}),
        "codewords": [
            [cw.c0.real, cw.c0.imag, cw.c1.real, cw.c1.imag] for cw in c.codewords
        ],
    }
    if z is not None:
        data["zopt"] = {
            "B": z.structure.B,
            "C": z.structure.C,
            "l": z.structure.l,
            "Z_l": list(z.structure.Z_l),
            "z_max": z.structure.z_max,
            "n_v": z.structure.n_v,
            "theta": [float(t) for t in z.theta],
            "layer_offsets": list(z.layer_offsets),
        }
    return data


def save_constellation(path, x, seed=None, extra_config=None) -> None:
    with open(path, "w") as fh:
        json.dump(constellation_to_dict(x, seed=seed, extra_config=extra_config), fh)
        fh.write("\n")


def constellation_from_dict(data, path=None):
    """Rebuild (Constellation, ZOptConstellation | None) from a JSON payload."""
    if not isinstance(data, dict):
        raise FormatError("expected a JSON object", path=path)
    _check_version(data, path)
    for key in ("method", "B", "codewords"):
        if key not in data:
            raise FormatError(f"missing field {key!r}", path=path)
    if data.get("T", 2) != 2 or data.get("M", 1) != 1:
        raise FormatError("only T=2, M=1 constellations are supported", path=path)
    try:
        codewords = [
            Codeword(complex(r0, i0), complex(r1, i1))
            for r0, i0, r1, i1 in data["codewords"]
        ]
        constellation = Constellation(codewords, data["method"], data["B"])
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad codeword data: {exc}", path=path) from exc
    zopt = None
    if "zopt" in data:
        zd = data["zopt"]
        try:
            structure = zopt_structure(int(zd["B"]))
            theta = np.asarray(zd["theta"], dtype=np.float64)
            offsets = tuple(zd["layer_offsets"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad layered-structure block: {exc}", path=path) from exc
        if sum(structure.Z_l) != len(constellation):
            raise FormatError("layer sizes do not match the codeword count", path=path)
        try:
            zopt = ZOptConstellation(structure=structure, theta=theta,
                                     constellation=constellation,
                                     layer_offsets=offsets)
        except InvalidInputError as exc:
            raise FormatError(f"bad layered-structure block: {exc}", path=path) from exc
    return constellation, zopt


def load_constellation(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}", path=path) from exc
    return constellation_from_dict(data, path=path)


# ---------------------------------------------------------------------------
# CSV with a reproducibility preamble


def _write_preamble(fh, seed, cfg_hash) -> None:
    fh.write(f"# format_version={FORMAT_VERSION}\n")
    fh.write(f"# tool_version={__version__}\n")
    fh.write(f"# config_hash={cfg_hash}\n")
    fh.write(f"# seed={seed}\n")


def write_csv(path_or_fh, header, rows, seed=None, cfg=None, footnotes=()) -> None:
    """Rows to CSV with '#' preamble lines carrying version, hash and seed."""

    def _emit(fh):
        _write_preamble(fh, seed, config_hash(cfg))
        for note in footnotes:
            fh.write(f"# {note}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)

    if isinstance(path_or_fh, (str, bytes)) or hasattr(path_or_fh, "__fspath__"):
        with open(path_or_fh, "w", newline="") as fh:
            _emit(fh)
    else:
        _emit(path_or_fh)


def ser_curve_rows(curve: SerCurve):
    header = ["snr_db", "trials", "errors", "ser",
              "mean_distance_evals", "mean_comparisons"]
    rows = [
        [curve.snr_db[i], curve.trials, curve.errors[i], f"{curve.ser[i]:.10g}",
         f"{curve.mean_distance_evals[i]:.10g}", f"{curve.mean_comparisons[i]:.10g}"]
        for i in range(len(curve.snr_db))
    ]
    return header, rows


def ser_curve_to_csv(path_or_fh, curve: SerCurve) -> None:
    header, rows = ser_curve_rows(curve)
    cfg = {k: v for k, v in asdict(curve).items()
           if k in ("snr_db", "trials", "seed", "detector", "N", "method", "C")}
    write_csv(path_or_fh, header, rows, seed=curve.seed, cfg=cfg)


def ser_curve_to_json(curve: SerCurve) -> dict:
    data = asdict(curve)
    data["format_version"] = FORMAT_VERSION
    data["tool_version"] = __version__
    data["config_hash"] = config_hash(
        {k: data[k] for k in ("snr_db", "trials", "seed", "detector", "N", "method", "C")}
    )
    return data


def bench_rows(reports: list[BenchReport]):
    header = ["detector", "trials", "errors", "mean_distance_evals",
              "max_distance_evals", "mean_comparisons", "mismatches_vs_first"]
    rows = [
        [r.detector, r.trials, r.errors, f"{r.mean_distance_evals:.10g}",
         r.max_distance_evals, f"{r.mean_comparisons:.10g}", r.mismatches_vs_first]
        for r in reports
    ]
    return header, rows


# ---------------------------------------------------------------------------
# run configuration files

_ALLOWED_PARAMS = {
    "construct": {"method", "B", "seed", "packing_file", "alpha", "symbols",
                  "output", "report", "starts", "phase1_iters", "phase2_sweeps"},
    "evaluate": {"inputs", "output"},
    "bound": {"c_min", "c_max", "output"},
    "simulate": {"constellation", "detector", "snr_db", "trials", "N", "seed",
                 "output", "json_output"},
    "bench": {"constellation", "detectors", "trials", "N", "seed", "snr_db", "output"},
    "detect": {"constellation", "detector", "input", "output"},
}


@dataclass(frozen=True)
class RunConfig:
    """One subcommand invocation, round-trippable through JSON."""

    command: str
    params: dict
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.command not in _ALLOWED_PARAMS:
            raise InvalidInputError(f"unknown command {self.command!r}")
        unknown = set(self.params) - _ALLOWED_PARAMS[self.command]
        if unknown:
            raise InvalidInputError(
                f"unknown parameter(s) for {self.command}: {sorted(unknown)}"
            )

    def to_json(self) -> str:
        return json.dumps(
            {"format_version": self.format_version, "command": self.command,
             "params": self.params},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str, path=None) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"not valid JSON: {exc}", path=path) from exc
        _check_version(data, path)
        unknown = set(data) - {"format_version", "command", "params"}
        if unknown:
            raise FormatError(f"unknown top-level field(s): {sorted(unknown)}", path=path)
        try:
            return cls(command=data["command"], params=dict(data["params"]),
                       format_version=data.get("format_version", 1))
        except KeyError as exc:
            raise FormatError(f"missing field {exc}", path=path) from exc
        except InvalidInputError as exc:
            raise FormatError(str(exc), path=path) from exc

    @property
    def hash(self) -> str:
        return config_hash({"command": self.command, "params": self.params})
