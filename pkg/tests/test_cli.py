import json
import subprocess
import sys

import numpy as np
import pytest

from varevo import cli


def _run(tmp_path, *args):
    out = tmp_path / "out"
    code = cli.run(["--output", str(out), *args])
    return code, out


def test_double_integrator_run(tmp_path, capsys):
    code, out = _run(tmp_path, "--problem", "double-integrator", "--tau-max", "20")
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["stop_reason"] == "TauMaxReached"
    assert report["nodes"] == 41 and len(report["pi"]) == 2
    header, hist = cli.read_csv(out / "history.csv")
    assert header == ["tau", "J", "res_u", "res_tf", "t_f", "g_drift", "pi_1", "pi_2"]
    assert hist.shape == (5, 8)
    assert (out / "costates.csv").exists()
    assert len(list(out.glob("trajectory_*.csv"))) == 5
    assert json.loads(capsys.readouterr().out)["stop_reason"] == "TauMaxReached"


def test_tau_max_zero_writes_single_snapshot(tmp_path):
    code, out = _run(tmp_path, "--problem", "brachistochrone", "--tau-max", "0")
    assert code == 0
    _, hist = cli.read_csv(out / "history.csv")
    assert hist.shape[0] == 1
    assert [p.name for p in out.glob("trajectory_*.csv")] == ["trajectory_00000.000.csv"]


def test_trajectory_csv_round_trips_bit_for_bit(tmp_path):
    from varevo import init_straightline_brachistochrone

    code, out = _run(tmp_path, "--problem", "brachistochrone", "--tau-max", "0")
    header, data = cli.read_csv(out / "trajectory_00000.000.csv")
    tr = init_straightline_brachistochrone(101)
    assert header == ["t", "x_1", "x_2", "x_3", "u_1"]
    assert np.array_equal(data.T, np.vstack([tr.times, tr.x, tr.u]))
    raw = (out / "trajectory_00000.000.csv").read_bytes()
    assert b"\r" not in raw


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    monkeypatch.chdir(tmp_path)
    assert cli.run(["--problem", "double-integrator", "--tau-max", "0"]) == 0
    assert (tmp_path / "env" / "report.json").exists()
    assert cli.run(["--problem", "double-integrator", "--tau-max", "0", "-o", "flag"]) == 0
    assert (tmp_path / "flag" / "report.json").exists()
    monkeypatch.delenv(cli.OUTPUT_ENV)
    assert cli.run(["--problem", "double-integrator", "--tau-max", "0"]) == 0
    assert (tmp_path / "varevo_output" / "report.json").exists()


def test_gain_matrix_file(tmp_path):
    kfile = tmp_path / "K.txt"
    kfile.write_text("0.2\n")
    code, out = _run(tmp_path, "--problem", "double-integrator", "--tau-max", "5", "--k-matrix", str(kfile))
    assert code == 0
    kfile.write_text("1 0\n0 1\n")
    code, _ = _run(tmp_path, "--problem", "double-integrator", "--tau-max", "5", "--k-matrix", str(kfile))
    assert code == cli.EXIT_USAGE


@pytest.mark.parametrize(
    "args",
    [
        ["--problem", "pendulum"],
        ["--problem", "brachistochrone", "--nodes", "2"],
        ["--problem", "brachistochrone", "--rel-tol", "-1"],
        ["--problem", "brachistochrone", "--k", "-0.1"],
        ["--problem", "brachistochrone", "--k", "1", "--k-matrix", "x"],
        [],
    ],
)
def test_usage_errors_exit_one(tmp_path, args, capsys):
    assert cli.run(["-o", str(tmp_path), *args]) == cli.EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_failed_solve_exits_two(tmp_path):
    code, out = _run(tmp_path, "--problem", "brachistochrone", "--moving-grid", "none", "--feasibility-tol", "0.02")
    assert code == cli.EXIT_FAILED
    assert json.loads((out / "report.json").read_text())["stop_reason"] == "FeasibilityLost"


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "varevo.cli", "--problem", "double-integrator", "--tau-max", "0", "-o", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["J"] > 3.25


def test_fmt_is_lossless():
    for v in (0.1, 1 / 3, np.pi * 1e-300, -2.5e17):
        assert float(cli.fmt(v)) == v


def test_double_integrator_full_run_reaches_minimum(tmp_path):
    code, out = _run(tmp_path, "--problem", "double-integrator", "--tau-max", "300")
    assert code == 0
    assert abs(json.loads((out / "report.json").read_text())["J"] - 3.25) <= 0.01


def test_brachistochrone_defaults_reach_reported_time(tmp_path):
    code, out = _run(tmp_path, "--problem", "brachistochrone")
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert abs(report["t_f"] - 0.8168) <= 0.005
    assert report["stop_reason"] == "ResidualMet"
