import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from lassogeom import delta_l1_closed_form
from lassogeom.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines())


def test_distance_closed_form(capsys):
    code, out, _ = run(capsys, "distance", "--n", "340", "--k", "10", "--lambda", "1", "3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["lambda"]) for r in rows] == [1.0, 3.0]
    assert float(rows[1]["delta"]) == delta_l1_closed_form(340, 10, 3.0)


def test_distance_monte_carlo_and_bound(capsys):
    code, out, _ = run(capsys, "distance", "--n", "50", "--k", "2", "--lambda", "1.5",
                       "--method", "monte_carlo", "--samples", "4000", "--seed", "3")
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and float(row["stderr"]) > 0
    assert abs(float(row["delta"]) - delta_l1_closed_form(50, 2, 1.5)) < 4 * float(row["stderr"])
    code, out, err = run(capsys, "distance", "--n", "50", "--k", "2", "--lambda", "0.5",
                         "--method", "analytic_bound")
    assert code == 2 and "error:" in err


def test_distance_nuclear(capsys):
    code, out, _ = run(capsys, "distance", "--reg", "nuclear", "--d", "6", "--r", "1",
                       "--lambda", "2", "--method", "monte_carlo", "--samples", "2000")
    assert code == 0 and float(next(csv.DictReader(io.StringIO(out)))["delta"]) > 0


def test_calibrate(capsys):
    code, out, _ = run(capsys, "calibrate", "--n", "340", "--k", "10", "--m", "140")
    d = kv(out)
    assert code == 0 and d["feasible"] == "1"
    assert abs(float(d["delta_min"]) - 139) <= 1e-6 * 139
    assert float(d["lam_min"]) < float(d["lam_best"]) < float(d["lam_max"])
    code, out, _ = run(capsys, "calibrate", "--n", "340", "--k", "10", "--m", "30")
    assert code == 3 and kv(out)["lam_min"] == "none"


def test_bound(capsys):
    code, out, _ = run(capsys, "bound", "--m", "401", "--delta", "100", "--t", "2",
                       "--znorm", "1")
    assert code == 0 and float(kv(out)["value"]) == 3.0
    code, out, _ = run(capsys, "bound", "--m", "140", "--delta", "100", "--znorm", "1",
                       "--flavor", "sharp")
    assert math.isclose(float(kv(out)["value"]), 10 / math.sqrt(40), rel_tol=1e-14)
    # default t from the 0.05 failure level exceeds the admissible range here
    code, _, err = run(capsys, "bound", "--m", "140", "--delta", "100", "--znorm", "1")
    assert code == 2 and "error:" in err


def test_solve(capsys, tmp_path):
    rng = np.random.default_rng(0)
    A = rng.standard_normal((20, 8))
    x0 = np.zeros(8)
    x0[2] = 1.5
    y = A @ x0 + 0.01 * rng.standard_normal(20)
    np.savetxt(tmp_path / "A.csv", A, delimiter=",")
    np.savetxt(tmp_path / "y.csv", y, delimiter=",")
    code, out, err = run(capsys, "solve", "--input", str(tmp_path / "A.csv"),
                         str(tmp_path / "y.csv"), "--lambda", "1.0")
    assert code == 0 and "converged=1" in err
    x = np.array([float(v) for v in out.split()])
    assert x.shape == (8,) and abs(x[2] - 1.5) < 0.1
    code, _, err = run(capsys, "solve", "--input", str(tmp_path / "A.csv"),
                       str(tmp_path / "y.csv"), "--lambda", "1.0", "--estimator", "l22",
                       "--output", str(tmp_path / "x.txt"))
    assert code == 0 and len((tmp_path / "x.txt").read_text().split()) == 8
    code, _, err = run(capsys, "solve", "--input", str(tmp_path / "nope.csv"),
                       str(tmp_path / "y.csv"), "--lambda", "1.0")
    assert code == 2


CFG = """n = 60
m = 40
k = 3
lambda_grid = interior:3
noise = gaussian:0.2; uniform:0.3
trials = 2
t_policy = frac:0.5
seed = 5
prove_t = 1.5
prove_scenarios = 500
prove_samples = 4000
"""


def test_simulate_and_worker_independence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CFG)
    assert run(capsys, "simulate", "--config", str(cfg), "--workers", "1",
               "--output", str(tmp_path / "a.csv"))[0] == 0
    assert run(capsys, "simulate", "--config", str(cfg), "--workers", "4",
               "--output", str(tmp_path / "b.csv"))[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    code, _, err = run(capsys, "simulate", "--config", str(tmp_path / "missing.cfg"),
                       "--output", str(tmp_path / "c.csv"))
    assert code == 2 and "error:" in err


def test_figures(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CFG)
    code, _, _ = run(capsys, "figures", "--config", str(cfg), "--out-dir", str(tmp_path / "f"))
    assert code == 0
    for name in ("figure1.csv", "figure1.svg", "figure2_points.csv", "figure2_curves.csv",
                 "figure2.svg"):
        assert (tmp_path / "f" / name).exists()


def test_prove(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CFG)
    code, out, _ = run(capsys, "prove", "--config", str(cfg))
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {"gamma_le_sqrt_m", "events_joint", "phi_and_L_exceed_zbar", "end_to_end_bound"} <= \
        {r["check"] for r in rows}
    assert code == 0 and all(r["holds"] == "1" for r in rows)
    assert all(float(r["margin"]) >= 0 for r in rows)


def test_console_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "lassogeom.cli", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("distance", "calibrate", "bound", "solve", "simulate", "figures", "prove"):
        assert cmd in res.stdout


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
