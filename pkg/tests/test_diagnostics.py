import numpy as np
import pytest

from varevo import (
    GainConfig,
    TrajectoryGrid,
    classical_condition_check,
    compute_rates,
    optimality_residuals,
    reconstruct_costates,
    stationarity_check,
)
from varevo.diagnostics import bridge_residual, endpoint_residual
from varevo.problems import double_integrator_optimal_grid, double_integrator_optimum, integrate_open_loop


def _costates(problem, traj, gains=None):
    b = compute_rates(problem, traj, gains or GainConfig.scalar(problem.m))
    ct = reconstruct_costates(problem, traj, b.ts, b.gf, b.ms.pi, b.nodes)
    return b, ct


def test_costates_of_analytic_optimum(di):
    traj = double_integrator_optimal_grid(41)
    b, ct = _costates(di, traj)
    opt = double_integrator_optimum(traj.times)
    np.testing.assert_allclose(ct.gamma, np.vstack([opt["lam1"], opt["lam2"]]), atol=1e-12)
    rep = classical_condition_check(di, ct, traj, b.nodes)
    assert rep.costate_ode < 1e-12 and rep.h_u < 1e-12
    assert rep.transversality_time == 0.0
    res_u, res_tf = optimality_residuals(di, traj, b.ts, b.gf, b.ms.pi, b.nodes)
    assert res_u < 1e-8 and res_tf == 0.0
    assert stationarity_check(di, traj, b.ts, b.gf, b.ms.pi, b.nodes) < 1e-12


def test_endpoint_and_bridge_are_identities(brach, brach_init):
    b, ct = _costates(brach, brach_init)
    assert endpoint_residual(brach, ct, b.nodes) < 1e-14
    assert bridge_residual(brach, brach_init, b.ts, b.gf, ct, b.nodes) < 1e-13


def test_brachistochrone_initial_residual_regression(brach, brach_init):
    b, _ = _costates(brach, brach_init)
    res_u, res_tf = optimality_residuals(brach, brach_init, b.ts, b.gf, b.ms.pi, b.nodes)
    assert res_u == pytest.approx(0.69095098, abs=1e-7)
    assert res_tf == pytest.approx(0.30904902, abs=1e-7)


def test_stationarity_ignores_scalar_gain(di, di_init):
    vals = []
    for k in (0.1, 1.0, 7.0):
        b, _ = _costates(di, di_init, GainConfig.scalar(1, k))
        vals.append(stationarity_check(di, di_init, b.ts, b.gf, b.ms.pi, b.nodes))
    assert max(vals) < 1e-12
    assert np.ptp(vals) < 1e-12


def test_stationarity_flags_wrong_multiplier(di, di_init):
    b, _ = _costates(di, di_init)
    assert stationarity_check(di, di_init, b.ts, b.gf, b.ms.pi + 0.1, b.nodes) > 1e-3


def test_stationarity_is_zero_without_constraint(sled, brach_init):
    b, ct = _costates(sled, brach_init)
    assert stationarity_check(sled, brach_init, b.ts, b.gf, b.ms.pi) == 0.0
    assert ct.pi.size == 0


def test_costate_residual_is_second_order(sled):
    errs = []
    for N in (41, 81, 161):
        t = np.linspace(0.0, 0.9, N)
        u = (np.pi / 4 + 0.3 * np.sin(3 * t))[None, :]
        tr = TrajectoryGrid(x=np.zeros((3, N)), u=u, tf=0.9)
        tr = tr.replace(x=integrate_open_loop(sled, tr, u))
        b, ct = _costates(sled, tr)
        errs.append(classical_condition_check(sled, ct, tr, b.nodes).costate_ode)
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.02)


def test_free_time_transversality_follows_terminal_residual(brach, brach_init):
    b, ct = _costates(brach, brach_init)
    rep = classical_condition_check(brach, ct, brach_init, b.nodes)
    _, res_tf = optimality_residuals(brach, brach_init, b.ts, b.gf, b.ms.pi, b.nodes)
    assert rep.transversality_time == pytest.approx(res_tf, rel=1e-12)
    assert set(rep.as_dict()) == {"costate_ode", "h_u", "transversality_time", "transversality_state"}
