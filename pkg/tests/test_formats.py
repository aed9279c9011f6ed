import json
import math

import numpy as np
import pytest

from grassbloch.builders import build_s_opt
from grassbloch.channel import run_ser
from grassbloch.errors import FormatError, InvalidInputError
from grassbloch.formats import (
    FORMAT_VERSION,
    RunConfig,
    config_hash,
    constellation_from_dict,
    constellation_to_dict,
    load_constellation,
    save_constellation,
    ser_curve_to_csv,
    write_csv,
)
from grassbloch.packing import exact_packing
from grassbloch.zopt import build_z_opt


class TestConstellationJson:
    def test_round_trip_plain(self, tmp_path):
        x = build_s_opt(exact_packing(4))
        path = tmp_path / "c.json"
        save_constellation(path, x, seed=7)
        back, zopt = load_constellation(path)
        assert zopt is None
        assert back.method == "s-opt" and len(back) == 4
        assert np.allclose(back.array, x.array)

    def test_round_trip_layered(self, tmp_path):
        z = build_z_opt(5, seed=0)
        path = tmp_path / "z.json"
        save_constellation(path, z, seed=0)
        back, zback = load_constellation(path)
        assert zback is not None
        assert zback.structure.B == 5
        assert np.allclose(zback.theta, z.theta)
        assert zback.layer_offsets == z.layer_offsets
        assert np.allclose(back.array, z.constellation.array)

    def test_required_header_fields(self):
        x = build_s_opt(exact_packing(4))
        d = constellation_to_dict(x, seed=3)
        for key in ("format_version", "tool_version", "seed", "config_hash",
                    "method", "B", "T", "M", "codewords"):
            assert key in d
        assert d["T"] == 2 and d["M"] == 1

    def test_future_version_rejected(self, tmp_path):
        x = build_s_opt(exact_packing(4))
        d = constellation_to_dict(x)
        d["format_version"] = FORMAT_VERSION + 1
        path = tmp_path / "f.json"
        path.write_text(json.dumps(d))
        with pytest.raises(FormatError):
            load_constellation(path)

    def test_missing_field(self):
        with pytest.raises(FormatError):
            constellation_from_dict({"method": "s-opt", "B": 2})

    def test_wrong_shape_rejected(self):
        d = {"method": "s-opt", "B": 1, "T": 3, "M": 1,
             "codewords": [[1, 0, 0, 0], [0, 0, 1, 0]]}
        with pytest.raises(FormatError):
            constellation_from_dict(d)

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(FormatError):
            load_constellation(path)

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "arr.json"
        path.write_text("[1, 2, 3]")
        with pytest.raises(FormatError):
            load_constellation(path)

    def test_layer_block_size_mismatch(self, tmp_path):
        z = build_z_opt(3, seed=0)
        d = constellation_to_dict(z)
        d["zopt"]["B"] = 4  # structure for 16 codewords, file holds 8
        path = tmp_path / "zz.json"
        path.write_text(json.dumps(d))
        with pytest.raises(FormatError):
            load_constellation(path)

    def test_layer_block_bad_theta(self, tmp_path):
        z = build_z_opt(3, seed=0)
        d = constellation_to_dict(z)
        d["zopt"]["theta"] = [2.0, 1.0]  # not increasing
        path = tmp_path / "zt.json"
        path.write_text(json.dumps(d))
        with pytest.raises(FormatError):
            load_constellation(path)

    def test_fractional_bits(self, tmp_path):
        x = build_s_opt(exact_packing(12))
        path = tmp_path / "c12.json"
        save_constellation(path, x)
        back, _ = load_constellation(path)
        assert len(back) == 12
        assert back.B == pytest.approx(math.log2(12))


class TestCsv:
    def test_preamble(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, ["a", "b"], [[1, 2]], seed=9, cfg={"x": 1})
        text = path.read_text()
        assert "# format_version=" in text
        assert "# tool_version=" in text
        assert "# config_hash=" in text
        assert "# seed=9" in text
        assert text.strip().endswith("1,2")

    def test_ser_curve_csv(self, tmp_path):
        x = build_s_opt(exact_packing(4))
        curve = run_ser(x, "glrt", [0.0, 10.0], trials=500, N=1, seed=0)
        path = tmp_path / "ser.csv"
        ser_curve_to_csv(path, curve)
        lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
        assert lines[0].split(",")[:4] == ["snr_db", "trials", "errors", "ser"]
        assert len(lines) == 3


class TestConfigHash:
    def test_stable(self):
        assert config_hash({"a": 1, "b": [2, 3]}) == config_hash({"b": [2, 3], "a": 1})

    def test_sensitive(self):
        assert config_hash({"a": 1}) != config_hash({"a": 2})


class TestRunConfig:
    def test_round_trip(self):
        cfg = RunConfig("simulate", {"constellation": "x.json", "detector": "glrt",
                                     "snr_db": [0, 10], "trials": 100, "N": 2,
                                     "seed": 1})
        back = RunConfig.from_json(cfg.to_json())
        assert back == cfg
        assert back.hash == cfg.hash

    def test_unknown_param_rejected(self):
        with pytest.raises(InvalidInputError):
            RunConfig("simulate", {"detector": "glrt", "turbo": True})

    def test_unknown_command(self):
        with pytest.raises(InvalidInputError):
            RunConfig("deploy", {})

    def test_unknown_top_level_rejected(self):
        blob = json.dumps({"command": "bound", "params": {}, "extra": 1})
        with pytest.raises(FormatError):
            RunConfig.from_json(blob)

    def test_future_version_rejected(self):
        blob = json.dumps({"format_version": FORMAT_VERSION + 1,
                           "command": "bound", "params": {}})
        with pytest.raises(FormatError):
            RunConfig.from_json(blob)
