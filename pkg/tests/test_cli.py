import json
import math

import numpy as np
import pytest

from transportlab.cli import main


def write_problem(tmp_path, cfg, name="problem.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def pair_cfg():
    return {
        "domain": {"kind": "disk", "radius": 1.0},
        "norm": {"kind": "euclidean"},
        "f_plus": [[0.0, 1.0]],
        "f_minus": [[math.pi, 1.0]],
    }


def cos_cfg(n=200):
    s = np.linspace(0, 2 * math.pi, n, endpoint=False)
    return {
        "domain": {"kind": "disk", "radius": 1.0},
        "norm": {"kind": "euclidean"},
        "g": {"samples": [[float(a), float(math.cos(a))] for a in s]},
        "grid": {"n": 128},
    }


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSolve:
    def test_pair_report(self, tmp_path, capsys):
        prob = write_problem(tmp_path, pair_cfg())
        code, out, _ = run(capsys, "solve", "--problem", prob)
        assert code == 0
        rep = json.loads(out)
        assert rep["command"] == "solve"
        assert rep["cost"] == pytest.approx(2.0, rel=1e-12)
        assert rep["entries"] == [[0, 0, 1.0]]
        assert "backend" in rep and "version" in rep

    def test_out_dir_and_svg(self, tmp_path, capsys):
        prob = write_problem(tmp_path, pair_cfg())
        out_dir = tmp_path / "out"
        code, out, _ = run(
            capsys, "solve", "--problem", prob, "--out", str(out_dir), "--svg"
        )
        assert code == 0
        on_disk = (out_dir / "report.json").read_text()
        assert on_disk == out
        svg = (out_dir / "rays.svg").read_text()
        assert svg.startswith("<svg") and "<path" in svg

    def test_reruns_byte_identical(self, tmp_path, capsys):
        prob = write_problem(tmp_path, cos_cfg())
        _, first, _ = run(capsys, "solve", "--problem", prob, "--seed", "7")
        _, second, _ = run(capsys, "solve", "--problem", prob, "--seed", "7")
        assert first == second


class TestSchemaErrors:
    def test_unknown_key(self, tmp_path, capsys):
        cfg = pair_cfg()
        cfg["fplus_typo"] = []
        prob = write_problem(tmp_path, cfg)
        code, _, err = run(capsys, "solve", "--problem", prob)
        assert code == 2
        assert "fplus_typo" in err

    def test_invalid_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        code, _, err = run(capsys, "solve", "--problem", str(path))
        assert code == 2

    def test_g_and_measures_exclusive(self, tmp_path, capsys):
        cfg = pair_cfg()
        cfg["g"] = {"samples": [[0.0, 1.0], [3.0, 0.0]]}
        prob = write_problem(tmp_path, cfg)
        code, _, err = run(capsys, "solve", "--problem", prob)
        assert code == 2

    def test_lsg_requires_datum(self, tmp_path, capsys):
        prob = write_problem(tmp_path, pair_cfg())
        code, _, err = run(capsys, "lsg", "--problem", prob)
        assert code == 2
        assert "g" in err

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "solve", "--problem", "/nonexistent/x.json")
        assert code == 2


class TestInfeasible:
    def test_unbalanced_measures(self, tmp_path, capsys):
        cfg = pair_cfg()
        cfg["f_minus"] = [[math.pi, 2.0]]
        prob = write_problem(tmp_path, cfg)
        code, _, err = run(capsys, "solve", "--problem", prob)
        assert code == 3
        assert "unbalanced" in err


class TestDensityAndNorms:
    def test_density_outputs(self, tmp_path, capsys):
        prob = write_problem(tmp_path, pair_cfg())
        out_dir = tmp_path / "dens"
        code, out, _ = run(
            capsys,
            "density", "--problem", prob, "--tau", "0.5",
            "--grid", "64", "--out", str(out_dir), "--svg",
        )
        assert code == 0
        rep = json.loads(out)
        assert rep["integral"] == pytest.approx(1.0, rel=1e-9)
        assert (out_dir / "density.csv").exists()
        assert (out_dir / "density.pgm").read_bytes().startswith(b"P5")

    def test_lp_norm_report(self, tmp_path, capsys):
        prob = write_problem(tmp_path, pair_cfg())
        code, out, _ = run(
            capsys, "lp-norm", "--problem", prob, "--p", "1.5", "--grid", "64"
        )
        assert code == 0
        rep = json.loads(out)
        assert rep["p"] == 1.5
        assert rep["lp_norm"] > 0

    def test_bound_report(self, tmp_path, capsys):
        cfg = {
            "domain": {"kind": "disk", "radius": 1.0},
            "norm": {"kind": "euclidean"},
            "g": cos_cfg(400)["g"],
            "quadrature": 1,
        }
        prob = write_problem(tmp_path, cfg)
        code, out, _ = run(
            capsys, "bound", "--problem", prob, "--p", "2", "--tau", "0.5",
            "--grid", "128",
        )
        assert code == 0
        rep = json.loads(out)
        assert rep["time_integral"] == pytest.approx(math.log(2), rel=1e-9)
        assert rep["data_integral"] == pytest.approx(math.pi / 2, rel=1e-2)
        assert 0 < rep["ratio"] < 10

    def test_bound_diverges_on_atoms(self, tmp_path, capsys):
        prob = write_problem(tmp_path, pair_cfg())
        code, out, _ = run(
            capsys, "bound", "--problem", prob, "--p", "2", "--tau", "0.5",
            "--grid", "32",
        )
        assert code == 4
        rep = json.loads(out)
        assert rep["data_integral"] == "inf"


class TestLeastGradient:
    def test_lsg_report_and_field(self, tmp_path, capsys):
        prob = write_problem(tmp_path, cos_cfg())
        out_dir = tmp_path / "lsg"
        code, out, _ = run(
            capsys, "lsg", "--problem", prob, "--out", str(out_dir)
        )
        assert code == 0
        rep = json.loads(out)
        assert rep["cost"] == pytest.approx(math.pi, rel=0.05)
        assert rep["tv"] == pytest.approx(math.pi, rel=0.05)
        assert rep["trace_error"] <= 0.1
        assert set(rep["lp_norms"]) == {"1.5", "2.0"}
        assert (out_dir / "u.csv").exists()


class TestCounterexample:
    def test_exact_p2(self, capsys):
        code, out, _ = run(capsys, "cex", "--pairs", "8", "--p", "2")
        assert code == 0
        rep = json.loads(out)
        assert rep["ratio"] == pytest.approx(2.0, rel=1e-9)

    def test_exact_p3_exits_diverged(self, capsys):
        code, out, _ = run(capsys, "cex", "--pairs", "4", "--p", "3")
        assert code == 4
        rep = json.loads(out)
        assert rep["partial_sum"] == "inf"
        assert all(v == "inf" for v in rep["per_pair"])

    def test_grid_p3_finite(self, tmp_path, capsys):
        out_dir = tmp_path / "cex"
        code, out, _ = run(
            capsys,
            "cex", "--pairs", "4", "--p", "3", "--mode", "grid",
            "--grid", "12", "--atoms-per-arc", "48",
            "--out", str(out_dir), "--svg",
        )
        assert code == 0
        rep = json.loads(out)
        assert all(isinstance(v, float) for v in rep["per_pair"])
        assert "warning" in rep
        assert (out_dir / "arcs.svg").read_text().startswith("<svg")

    def test_cex_reruns_identical(self, capsys):
        _, a, _ = run(capsys, "cex", "--pairs", "6", "--p", "2.5")
        _, b, _ = run(capsys, "cex", "--pairs", "6", "--p", "2.5")
        assert a == b
