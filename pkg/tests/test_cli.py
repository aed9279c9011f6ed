import json
import math

import numpy as np
import pytest

from grassbloch.cli import main, _parse_snr
from grassbloch.errors import InvalidInputError


def run(args):
    return main([str(a) for a in args])


@pytest.fixture()
def zopt_file(tmp_path):
    out = tmp_path / "z3.json"
    assert run(["construct", "--method", "z-opt", "-B", 3, "-o", out]) == 0
    return out


class TestParseSnr:
    def test_list(self):
        assert _parse_snr("0,10,20") == [0.0, 10.0, 20.0]

    def test_range(self):
        assert _parse_snr("0:20:4") == [0.0, 4.0, 8.0, 12.0, 16.0, 20.0]

    def test_bad(self):
        with pytest.raises(InvalidInputError):
            _parse_snr("zero,one")


class TestConstruct:
    def test_zopt_b3_report(self, tmp_path, zopt_file):
        data = json.loads(zopt_file.read_text())
        assert len(data["codewords"]) == 8
        report = json.loads((tmp_path / "z3.json.report.json").read_text())
        assert report["d_min"] == pytest.approx(
            math.sqrt((4.0 - math.sqrt(2.0)) / 7.0), abs=1e-9
        )
        assert report["n_v"] == 1

    def test_sopt_b2_exact(self, tmp_path):
        out = tmp_path / "s2.json"
        assert run(["construct", "--method", "s-opt", "-B", 2, "-o", out]) == 0
        report = json.loads((tmp_path / "s2.json.report.json").read_text())
        assert report["d_min"] == pytest.approx(math.sqrt(6.0) / 3.0, abs=1e-9)
        assert report["ratio"] == pytest.approx(1.0, abs=1e-9)

    def test_grass_lattice_b2(self, tmp_path):
        out = tmp_path / "g.json"
        assert run(["construct", "--method", "grass-lattice", "-B", 2, "-o", out]) == 0
        data = json.loads(out.read_text())
        assert len(data["codewords"]) == 4
        norms = [r0 * r0 + i0 * i0 + r1 * r1 + i1 * i1
                 for r0, i0, r1, i1 in data["codewords"]]
        assert np.allclose(norms, 1.0, atol=1e-9)

    def test_grass_lattice_odd_bits_usage_error(self, tmp_path):
        assert run(["construct", "--method", "grass-lattice", "-B", 3,
                    "-o", tmp_path / "x.json"]) == 2

    def test_sopt_with_packing_file(self, tmp_path):
        pk = tmp_path / "pk.txt"
        pk.write_text("0 0 1\n0 0 -1\n")
        out = tmp_path / "s.json"
        assert run(["construct", "--method", "s-opt", "-B", 1,
                    "--packing-file", pk, "-o", out]) == 0
        rep = json.loads((tmp_path / "s.json.report.json").read_text())
        assert rep["d_min"] == pytest.approx(1.0, abs=1e-12)

    def test_packing_count_mismatch(self, tmp_path):
        pk = tmp_path / "pk.txt"
        pk.write_text("0 0 1\n0 0 -1\n")
        assert run(["construct", "--method", "s-opt", "-B", 2,
                    "--packing-file", pk, "-o", tmp_path / "s.json"]) == 2

    def test_optimizer_flags(self, tmp_path):
        out = tmp_path / "m.json"
        assert run(["construct", "--method", "man-opt", "-B", 4, "-o", out,
                    "--starts", 1, "--phase1-iters", 60, "--phase2-sweeps", 80]) == 0
        report = json.loads((tmp_path / "m.json.report.json").read_text())
        assert report["C"] == 16 and report["d_min"] > 0.3


class TestEvaluate:
    def test_table(self, tmp_path, zopt_file):
        out = tmp_path / "eval.csv"
        assert run(["evaluate", zopt_file, "--output", out]) == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "method,B,C,d_min,fejes_toth_bound,ratio"
        cells = lines[1].split(",")
        assert cells[0] == "z-opt" and cells[2] == "8"
        assert float(cells[5]) <= 1.0 + 1e-9

    def test_icosahedron_ratio_is_one(self, tmp_path):
        # a 12-line constellation attains the bound exactly
        from grassbloch.builders import build_s_opt
        from grassbloch.formats import save_constellation
        from grassbloch.packing import exact_packing
        path = tmp_path / "s12.json"
        save_constellation(path, build_s_opt(exact_packing(12)))
        out = tmp_path / "eval12.csv"
        assert run(["evaluate", path, "-o", out]) == 0
        row = [l for l in out.read_text().splitlines()
               if l and not l.startswith("#")][1].split(",")
        assert row[2] == "12"
        assert abs(float(row[5]) - 1.0) <= 1e-6

    def test_bound_blank_for_two_points(self, tmp_path):
        from grassbloch.builders import build_s_opt
        from grassbloch.formats import save_constellation
        from grassbloch.packing import exact_packing
        path = tmp_path / "s2.json"
        save_constellation(path, build_s_opt(exact_packing(2)))
        out = tmp_path / "eval2.csv"
        assert run(["evaluate", path, "-o", out]) == 0
        text = out.read_text()
        row = [l for l in text.splitlines() if l and not l.startswith("#")][1]
        assert row.split(",")[4] == ""
        assert "exact value is 1" in text

    def test_missing_file(self, tmp_path):
        assert run(["evaluate", tmp_path / "none.json"]) == 3


class TestBound:
    def test_csv_monotone(self, tmp_path):
        out = tmp_path / "b.csv"
        assert run(["bound", "--c-min", 3, "--c-max", 40, "-o", out]) == 0
        rows = [l.split(",") for l in out.read_text().splitlines()
                if l and not l.startswith("#")][1:]
        vals = [float(r[1]) for r in rows]
        assert len(vals) == 38
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_c2_rejected(self):
        assert run(["bound", "--c-min", 2, "--c-max", 5]) == 2


class TestSimulate:
    def test_csv_output(self, tmp_path, zopt_file):
        out = tmp_path / "ser.csv"
        code = run(["simulate", "--constellation", zopt_file, "--detector", "zopt",
                    "--snr", "0,10", "--trials", 2000, "--seed", 5, "-o", out])
        assert code == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert len(lines) == 3

    def test_matched_seeds_equivalence(self, tmp_path, zopt_file):
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        for det, out in (("glrt", out_a), ("sopt", out_b)):
            assert run(["simulate", "--constellation", zopt_file, "--detector", det,
                        "--snr", "0,6", "--trials", 5000, "--seed", 11, "-o", out]) == 0

        def ser_column(path):
            rows = [l.split(",") for l in path.read_text().splitlines()
                    if l and not l.startswith("#")][1:]
            return [r[3] for r in rows]

        assert ser_column(out_a) == ser_column(out_b)

    def test_zero_trials_usage_error(self, zopt_file):
        assert run(["simulate", "--constellation", zopt_file, "--snr", "0",
                    "--trials", 0]) == 2

    def test_json_metadata(self, tmp_path, zopt_file):
        out = tmp_path / "ser.csv"
        meta = tmp_path / "ser.json"
        assert run(["simulate", "--constellation", zopt_file, "--snr", "0",
                    "--trials", 100, "-o", out, "--json", meta]) == 0
        data = json.loads(meta.read_text())
        assert data["trials"] == 100 and "config_hash" in data


class TestBench:
    def test_glrt_mean_evals(self, tmp_path):
        out6 = tmp_path / "z6.json"
        assert run(["construct", "--method", "z-opt", "-B", 6, "-o", out6]) == 0
        rep = tmp_path / "bench.csv"
        assert run(["bench", "--constellation", out6, "--detectors", "glrt,sopt,zopt",
                    "--trials", 2000, "-o", rep]) == 0
        rows = [l.split(",") for l in rep.read_text().splitlines()
                if l and not l.startswith("#")][1:]
        glrt = next(r for r in rows if r[0] == "glrt")
        assert float(glrt[3]) == 64.0
        for r in rows:
            assert int(r[6]) == 0  # no detector disagrees with the reference


class TestDetect:
    def test_round_trip(self, tmp_path, zopt_file):
        data = json.loads(zopt_file.read_text())
        rows = []
        for r0, i0, r1, i1 in data["codewords"][:4]:
            # noiseless single-antenna observation of each codeword
            h = 0.3 - 1.1j
            y0 = math.sqrt(2) * complex(r0, i0) * h
            y1 = math.sqrt(2) * complex(r1, i1) * h
            rows.append(f"{y0.real} {y0.imag} {y1.real} {y1.imag}")
        rx = tmp_path / "rx.csv"
        rx.write_text("\n".join(rows) + "\n")
        out = tmp_path / "det.csv"
        assert run(["detect", "--constellation", zopt_file, "--detector", "zopt",
                    "--input", rx, "-o", out]) == 0
        got = [l.split(",") for l in out.read_text().splitlines()
               if l and not l.startswith("#")][1:]
        assert [int(r[1]) for r in got] == [0, 1, 2, 3]
        assert all(int(r[2]) <= 4 for r in got)

    def test_two_antenna_rows(self, tmp_path, zopt_file):
        data = json.loads(zopt_file.read_text())
        r0, i0, r1, i1 = data["codewords"][2]
        x = np.array([complex(r0, i0), complex(r1, i1)])
        Y = math.sqrt(2.0) * np.outer(x, [1.0 - 0.4j, 0.7j])
        vals = []
        for n in range(2):
            for row in range(2):
                vals += [Y[row, n].real, Y[row, n].imag]
        rx = tmp_path / "rx2.csv"
        rx.write_text(" ".join(f"{v:.17g}" for v in vals) + "\n")
        out = tmp_path / "det2.csv"
        for det in ("glrt", "sopt", "zopt"):
            assert run(["detect", "--constellation", zopt_file, "--detector", det,
                        "--input", rx, "-o", out]) == 0
            row = [l for l in out.read_text().splitlines()
                   if l and not l.startswith("#")][1]
            assert int(row.split(",")[1]) == 2

    def test_bad_row_format_error(self, tmp_path, zopt_file):
        rx = tmp_path / "rx.csv"
        rx.write_text("1 2 3\n")
        assert run(["detect", "--constellation", zopt_file, "--input", rx]) == 3

    def test_zopt_detector_needs_structure(self, tmp_path):
        out = tmp_path / "s2.json"
        assert run(["construct", "--method", "s-opt", "-B", 2, "-o", out]) == 0
        rx = tmp_path / "rx.csv"
        rx.write_text("1 0 0 0\n")
        assert run(["detect", "--constellation", out, "--detector", "zopt",
                    "--input", rx]) == 2


def test_explicit_report_path(tmp_path):
    out = tmp_path / "c.json"
    rep = tmp_path / "custom_report.json"
    assert run(["construct", "--method", "cube-split", "-B", 2, "-o", out,
                "--report", rep]) == 0
    data = json.loads(rep.read_text())
    assert data["C"] == 4 and "config_hash" in data


def test_version_flag():
    assert run(["--version"]) == 0


def test_usage_error_exit_code():
    assert run(["construct", "--method", "nope", "-B", 2, "-o", "x.json"]) == 2
