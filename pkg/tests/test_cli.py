import csv
import json
import math
import re
from pathlib import Path

import numpy as np
import pytest

from fraclos import domain_boundary_polyline, make_domain
from fraclos.cli import SWEEP_COLUMNS, main, write_sweep_csv
from fraclos.experiments import stretched_exponential_rows
from oracles import PolylineOracle

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def info_value(out, key):
    m = re.search(rf"^\s*{key} = (\S+)$", out, re.M)
    return float(m.group(1))


class TestInfo:
    @pytest.mark.parametrize("family,theta,D", [(2, 0.4, 1.13), (2, 0.7, 1.63), (3, 0.3, 1.13), (3, 0.5, 1.50)])
    def test_dimensions(self, capsys, family, theta, D):
        code, out, _ = run(capsys, "info", "--family", family, "--theta", theta)
        assert code == 0
        assert round(info_value(out, "D"), 2) == D

    def test_json(self, capsys):
        code, out, _ = run(capsys, "info", "--family", 2, "--theta-deg", 30, "--json")
        data = json.loads(out)
        assert data["D"] == pytest.approx(math.log(4) / math.log(3), abs=1e-12)

    def test_out_of_range(self, capsys):
        code, _, err = run(capsys, "info", "--family", 2, "--theta", 0.9)
        assert code == 2
        assert "(0, 0.785398163397)" in err

    def test_bad_family(self, capsys):
        code, _, _ = run(capsys, "info", "--family", 4, "--theta", 0.2)
        assert code == 2

    def test_missing_theta(self, capsys):
        code, _, _ = run(capsys, "info", "--family", 2)
        assert code == 2


class TestRender:
    def test_level_zero_square(self, capsys):
        code, out, _ = run(capsys, "render", "--family", 2, "--theta", 0.4, "--level", 0, "--format", "csv")
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == ["x", "y"]
        assert sorted((float(x), float(y)) for x, y in rows[1:]) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]

    def test_vertex_count(self, capsys, tmp_path):
        target = tmp_path / "koch.csv"
        code, _, _ = run(capsys, "render", "--family", 2, "--theta-deg", 30, "--level", 4, "--format", "csv", "-o", target)
        assert code == 0
        lines = target.read_text().splitlines()
        assert len(lines) == 1 + 4 * 2**4
        assert json.loads((tmp_path / "koch.csv.manifest.json").read_text())["command"] == "render"

    def test_round_trip_12_digits(self, capsys, tmp_path):
        target = tmp_path / "b.csv"
        run(capsys, "render", "--family", 3, "--theta", 0.5, "--level", 3, "--format", "csv", "-o", target)
        got = np.loadtxt(target, delimiter=",", skiprows=1)
        want = domain_boundary_polyline(make_domain(3, 0.5), 3)
        np.testing.assert_allclose(got, want, rtol=1e-11, atol=1e-12)
        again = "x,y\n" + "".join(f"{x + 0.0:.12g},{y + 0.0:.12g}\n" for x, y in got)
        assert again == target.read_text()

    def test_golden_csv(self, capsys):
        code, out, _ = run(capsys, "render", "--family", 2, "--theta", 0.4, "--level", 2, "--format", "csv")
        assert out == (GOLDEN / "boundary_f2_0.4_level2.csv").read_text()

    def test_svg(self, capsys):
        code, out, _ = run(capsys, "render", "--family", 2, "--theta", 0.7, "--level", 3)
        d = make_domain(2, 0.7)
        assert out.startswith("<svg")
        assert f'viewBox="{-d.y_max:.12g} {-d.y_max:.12g}' in out
        assert 'fill="none"' in out

    def test_svg_overlay(self, capsys, tmp_path):
        run(capsys, "sample", "--family", 2, "--theta", 0.4, "--rho", 3, "--seed", 1, "--out-dir", tmp_path)
        code, out, _ = run(capsys, "render", "--family", 2, "--theta", 0.4, "--nodes", tmp_path / "nodes.csv",
                           "--edges", tmp_path / "edges.csv")
        assert code == 0
        n_nodes = len((tmp_path / "nodes.csv").read_text().splitlines()) - 1
        assert out.count("<circle") == n_nodes

    def test_budget(self, capsys):
        code, _, err = run(capsys, "render", "--family", 3, "--theta", 0.3, "--level", 20)
        assert code == 3 and "budget" in err


class TestSample:
    def test_empty(self, capsys, tmp_path):
        code, out, _ = run(capsys, "sample", "--family", 2, "--theta", 0.7, "--rho", 0, "--out-dir", tmp_path)
        assert code == 0
        assert (tmp_path / "nodes.csv").read_text() == "id,x,y\n"
        assert (tmp_path / "edges.csv").read_text() == "id_a,id_b\n"
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["fully_connected"] is True and report["N"] == 0
        assert json.loads(out)["component_count"] == 0

    def test_deterministic_files(self, capsys, tmp_path):
        for name in ("a", "b"):
            run(capsys, "sample", "--family", 3, "--theta", 0.5, "--rho", 6, "--seed", 99, "--out-dir", tmp_path / name)
        for f in ("nodes.csv", "edges.csv", "report.json"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
        ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
        mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
        ma.pop("timestamp")
        mb.pop("timestamp")
        assert ma == mb

    def test_json_format(self, capsys, tmp_path):
        run(capsys, "sample", "--family", 2, "--theta", 0.4, "--rho", 4, "--seed", 3, "--format", "json", "--out-dir", tmp_path)
        doc = json.loads((tmp_path / "network.json").read_text())
        assert len(doc["nodes"]) == json.loads((tmp_path / "report.json").read_text())["N"]
        assert all(a < b for a, b in doc["edges"])

    def test_negative_rho(self, capsys, tmp_path):
        code, _, _ = run(capsys, "sample", "--family", 2, "--theta", 0.4, "--rho", -1, "--out-dir", tmp_path)
        assert code == 2

    def test_edges_pass_oracle_recheck(self, capsys, tmp_path):
        """Every edge of an F2(0.7) deployment is in range and clear of the boundary polygon."""
        level = 16
        run(capsys, "sample", "--family", 2, "--theta", 0.7, "--rho", 5, "--seed", 2015,
            "--max-depth", level, "--out-dir", tmp_path)
        pts = np.loadtxt(tmp_path / "nodes.csv", delimiter=",", skiprows=1)[:, 1:]
        edges = np.loadtxt(tmp_path / "edges.csv", delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
        assert len(edges) > 10
        oracle = PolylineOracle(domain_boundary_polyline(make_domain(2, 0.7), level), cell=0.02)
        for a, b in edges:
            p, q = pts[a], pts[b]
            assert np.hypot(*(p - q)) <= 1.0
            if oracle.clearance(p, q, 1e-6) < 1e-6:
                continue
            assert not oracle.segment_crosses(p, q)


class TestSweep:
    def test_single_trial(self, capsys, tmp_path):
        out = tmp_path / "s.csv"
        code, _, _ = run(capsys, "sweep", "--family", 2, "--theta", 0.7, "--rho", 3, "--trials", 1, "-o", out)
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 1 and rows[0]["successes"] in ("0", "1")

    def test_identical_bytes(self, capsys, tmp_path):
        args = ["sweep", "--family", 3, "--theta", 0.3, "--rho", "1,4", "--trials", 25]
        run(capsys, *args, "-o", tmp_path / "a.csv")
        run(capsys, *args, "--threads", 3, "-o", tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_golden(self, capsys):
        code, out, _ = run(capsys, "sweep", "--family", 2, "--theta", "0.4,0.7", "--rho", "0.5,2", "--trials", 20, "--seed", 7)
        assert out == (GOLDEN / "sweep_small.csv").read_text()

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text("# golden run\nfamily = 2\nthetas = 0.4, 0.7\nrhos = 0.5, 2\ntrials = 5\nseed = 7\n")
        code, out, _ = run(capsys, "sweep", "--config", cfg, "--trials", 20)
        assert code == 0
        assert out == (GOLDEN / "sweep_small.csv").read_text()

    def test_bad_inputs(self, capsys, tmp_path):
        assert run(capsys, "sweep", "--family", 2, "--theta", 0.7)[0] == 2
        assert run(capsys, "sweep", "--family", 2, "--theta", 0.7, "--rho", "4,2")[0] == 2
        assert run(capsys, "sweep", "--family", 2, "--theta", 0.9, "--rho", "1")[0] == 2
        bad = tmp_path / "bad.cfg"
        bad.write_text("colour = blue\n")
        assert run(capsys, "sweep", "--config", bad)[0] == 2

    def test_figure_style_run(self, capsys, tmp_path):
        rhos = ",".join(f"{v:.6g}" for v in np.logspace(-0.5, 1, 4))
        for family, thetas in ((2, "0.1,0.3,0.5,0.7"), (3, "0.1,0.2,0.3,0.45")):
            out = tmp_path / f"f{family}.csv"
            code, _, _ = run(capsys, "sweep", "--family", family, "--theta", thetas, "--rho", rhos, "--trials", 8, "-o", out)
            assert code == 0
            rows = list(csv.DictReader(out.open()))
            assert list(rows[0]) == SWEEP_COLUMNS
            assert len(rows) == 16
            for r in rows:
                assert float(r["ci_low"]) <= float(r["p_hat"]) <= float(r["ci_high"])


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        write_sweep_csv(rows, fh)


class TestFitAndCheck:
    def test_fit_synthetic(self, capsys, tmp_path):
        path = tmp_path / "syn.csv"
        write_rows(path, stretched_exponential_rows(0.3, 0.8, [1, 2, 4, 8, 16], family=2, theta=0.7))
        code, out, _ = run(capsys, "fit", "-i", path)
        assert code == 0
        beta = float(re.search(r"beta_hat = (\S+)", out).group(1))
        a = float(re.search(r"a_hat    = (\S+)", out).group(1))
        assert beta == pytest.approx(0.8, abs=1e-6) and a == pytest.approx(0.3, abs=1e-6)
        assert "D/2" in out

    def test_fit_all_connected(self, capsys, tmp_path):
        path = tmp_path / "ones.csv"
        path.write_text(",".join(SWEEP_COLUMNS) + "\n" + "".join(
            f"2,0.7,{r},10,10,1.0,0.7,1.0,3.0,0.0,0\n" for r in (1, 2, 4)))
        assert run(capsys, "fit", "-i", path)[0] == 4

    def test_fit_bad_csv(self, capsys, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        assert run(capsys, "fit", "-i", path)[0] == 2
        assert run(capsys, "fit", "-i", tmp_path / "missing.csv")[0] == 2

    def test_check_exact_law(self, capsys, tmp_path):
        d = make_domain(2, 0.7)
        rhos = sorted({1.0, 2.0, 1.0 / d.r**2, 2.0 / d.r**2})
        path = tmp_path / "law.csv"
        write_rows(path, stretched_exponential_rows(0.4, d.D / 2, rhos, family=2, theta=0.7))
        code, out, _ = run(capsys, "check", "-i", path, "--family", 2, "--theta", 0.7)
        assert code == 0
        table = [line.split() for line in out.splitlines()[2:]]
        assert len(table) == 2
        for _, _, lhs, rhs, _ in table:
            assert float(lhs) == pytest.approx(float(rhs), rel=1e-5)

    def test_check_no_pairs(self, capsys):
        code, _, err = run(capsys, "check", "-i", GOLDEN / "sweep_small.csv", "--family", 2, "--theta", 0.7)
        assert code == 4 and "no (rho" in err


class TestReplay:
    def test_sweep(self, capsys, tmp_path):
        first = tmp_path / "first.csv"
        run(capsys, "sweep", "--family", 2, "--theta", 0.7, "--rho", "1,3", "--trials", 15, "--seed", 5, "-o", first)
        again = tmp_path / "again.csv"
        code, _, _ = run(capsys, "replay", str(first) + ".manifest.json", "-o", again, "--threads", 2)
        assert code == 0
        assert first.read_bytes() == again.read_bytes()

    def test_sample(self, capsys, tmp_path):
        run(capsys, "sample", "--family", 3, "--theta", 0.3, "--rho", 5, "--seed", 8, "--out-dir", tmp_path / "a")
        code, _, _ = run(capsys, "replay", tmp_path / "a" / "manifest.json", "-o", tmp_path / "b")
        assert code == 0
        for f in ("nodes.csv", "edges.csv", "report.json"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_unknown(self, capsys, tmp_path):
        m = tmp_path / "m.json"
        m.write_text(json.dumps({"command": "info", "config": {}}))
        assert run(capsys, "replay", m)[0] == 2
