import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varevo import (
    EvolutionConfig,
    GainConfig,
    InfeasibleInitError,
    LayoutError,
    MovingGrid,
    StopReason,
    TrajectoryGrid,
    epde_rhs,
    evolve,
    pack_state,
    unpack_state,
)
from varevo.engine import Layout
from varevo.problems import double_integrator_optimal_grid


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 4), m=st.integers(1, 3), N=st.integers(3, 20), free=st.booleans(), seed=st.integers(0, 999))
def test_pack_unpack_round_trip(n, m, N, free, seed):
    rng = np.random.default_rng(seed)
    tr = TrajectoryGrid(x=rng.normal(size=(n, N)), u=rng.normal(size=(m, N)), tf=1.0 + rng.random())
    layout = Layout(n, m, N, free, tf_fixed=None if free else tr.tf)
    y = pack_state(tr, free)
    assert y.size == layout.size
    back = unpack_state(y, layout)
    assert np.array_equal(back.x, tr.x) and np.array_equal(back.u, tr.u) and back.tf == tr.tf


def test_layout_sizes(di, brach):
    assert Layout.for_problem(di, 41).size == 123
    assert Layout.for_problem(brach, 101).size == 405


def test_wrong_length_raises(di):
    with pytest.raises(LayoutError):
        unpack_state(np.zeros(122), Layout.for_problem(di, 41))


def test_rhs_vanishes_at_analytic_optimum(di):
    y = pack_state(double_integrator_optimal_grid(41), False)
    assert np.max(np.abs(epde_rhs(di, y, GainConfig.scalar(1), 41))) < 1e-12


def test_convective_terms_only_for_free_time(brach, brach_init):
    gains = GainConfig.scalar(1)
    y = pack_state(brach_init, True)
    a = epde_rhs(brach, y, gains, 101, MovingGrid.CONVECTIVE)
    b = epde_rhs(brach, y, gains, 101, MovingGrid.NONE)
    assert a[-1] == b[-1]
    s = np.linspace(0.0, 1.0, 101)
    # straight-line slide: x1 node rate gains s_i * V sin(pi/4) * dtf
    expected = s * brach_init.x[2] * np.sin(np.pi / 4) * a[-1]
    np.testing.assert_allclose(a[:101] - b[:101], expected, atol=1e-14)


def test_tau_max_zero_returns_initial_snapshot(di, di_init):
    rep = evolve(di, di_init, GainConfig.scalar(1), EvolutionConfig(tau_max=0.0))
    assert rep.stop_reason is StopReason.TAU_MAX_REACHED
    assert len(rep.records) == 1 and rep.records[0].tau == 0.0
    assert rep.final is di_init or np.array_equal(rep.final.x, di_init.x)


def test_residual_stop(di, di_init):
    cfg = EvolutionConfig(tau_max=100, residual_tol=1e-4, rel_tol=1e-6, abs_tol=1e-9)
    rep = evolve(di, di_init, GainConfig.scalar(1, 1.0), cfg)
    assert rep.stop_reason is StopReason.RESIDUAL_MET
    assert rep.final_record.res_u < 1e-4
    assert rep.final_record.tau < 100


def test_snapshots_on_schedule(di, di_init):
    rep = evolve(di, di_init, GainConfig.scalar(1), EvolutionConfig(tau_max=12.0, snapshot_every=5.0))
    np.testing.assert_allclose(rep.history("tau"), [0, 5, 10, 12])
    assert rep.nfev > 0 and rep.wall_time > 0


def test_infeasible_init_rejected(di, di_init):
    bad = di_init.replace(x=di_init.x + 0.5)
    with pytest.raises(InfeasibleInitError):
        evolve(di, bad, GainConfig.scalar(1))


def test_fixed_time_mismatch_rejected(di, di_init):
    with pytest.raises(ValueError, match="fixed terminal time"):
        evolve(di, di_init.replace(tf=2.5), GainConfig.scalar(1))


def test_feasibility_loss_detected(brach, brach_init):
    cfg = EvolutionConfig(feasibility_tol=0.02, moving_grid=MovingGrid.NONE)
    rep = evolve(brach, brach_init, GainConfig.scalar(1), cfg)
    assert rep.stop_reason is StopReason.FEASIBILITY_LOST
    assert "constraint drift" in rep.message


def test_failing_callback_reports_divergence(di, di_init):
    from varevo import EvaluationError, ProblemModel

    calls = {"n": 0}

    def f_u(x, u, t):
        calls["n"] += 1
        if calls["n"] > 500:
            raise EvaluationError("model left its domain")
        return np.array([[0.0], [1.0]])

    p = ProblemModel(n=2, m=1, x0=[1, 1], terminal_time=2.0, q=2, f=di.f, f_x=di.f_x, f_u=f_u,
                     L=di.L, L_x=di.L_x, L_u=di.L_u, g=di.g, g_x=di.g_x, g_t=di.g_t)
    rep = evolve(p, di_init, GainConfig.scalar(1), EvolutionConfig(tau_max=50))
    assert rep.stop_reason is StopReason.DIVERGED
    assert "domain" in rep.message
    assert len(rep.records) >= 1


def test_grid_convection_keeps_constraint(ex2_report, brach, brach_init):
    assert max(ex2_report.history("g_drift")) < 1e-3
    rep = evolve(brach, brach_init, GainConfig.scalar(1), EvolutionConfig(moving_grid=MovingGrid.NONE, tau_max=50))
    assert max(rep.history("g_drift")) > 0.1
