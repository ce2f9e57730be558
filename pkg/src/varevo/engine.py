"""Semi-discrete evolution in variation time.

The nodal states, controls and (when free) the terminal time are packed into
one vector and integrated in variation time ``tau`` with the Dormand-Prince
5(4) pair until the optimality residuals vanish or ``tau_max`` is reached.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from .core import RateBundle, compute_rates
from .errors import InfeasibleInitError, LayoutError, VarevoError
from .model import GainConfig, ProblemModel, TrajectoryGrid, evaluate_cost, feasibility_residual

log = logging.getLogger(__name__)


class StopReason(enum.Enum):
    RESIDUAL_MET = "ResidualMet"
    TAU_MAX_REACHED = "TauMaxReached"
    DIVERGED = "Diverged"
    FEASIBILITY_LOST = "FeasibilityLost"


class MovingGrid(enum.Enum):
    """How nodal values follow the grid when the terminal time evolves.

    ``CONVECTIVE`` adds ``s_i * dtf * d/dt`` of the state and control so each
    node keeps tracking the physical trajectory as the grid stretches.
    ``NONE`` moves nodal values by the fixed-time rates only.
    """

    CONVECTIVE = "convective"
    NONE = "none"


@dataclass(frozen=True)
class EvolutionConfig:
    tau_max: float = 300.0
    rel_tol: float = 1e-3
    abs_tol: float = 1e-6
    residual_tol: float = 1e-6
    snapshot_every: float = 5.0
    feasibility_tol: float = 0.1
    moving_grid: MovingGrid = MovingGrid.CONVECTIVE
    transition_substeps: int = 1

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "residual_tol", "snapshot_every", "feasibility_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.tau_max < 0:
            raise ValueError("tau_max must be non-negative")
        object.__setattr__(self, "moving_grid", MovingGrid(self.moving_grid))


@dataclass(frozen=True)
class SnapshotRecord:
    tau: float
    J: float
    res_u: float
    res_tf: float
    pi: np.ndarray
    tf: float
    g_drift: float
    dyn_res: float


@dataclass
class SolveReport:
    records: list[SnapshotRecord] = field(default_factory=list)
    snapshots: list[TrajectoryGrid] = field(default_factory=list)
    stop_reason: StopReason = StopReason.TAU_MAX_REACHED
    message: str = ""
    nfev: int = 0
    wall_time: float = 0.0

    @property
    def final(self) -> TrajectoryGrid:
        return self.snapshots[-1]

    @property
    def final_record(self) -> SnapshotRecord:
        return self.records[-1]

    def history(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


@dataclass(frozen=True)
class Layout:
    n: int
    m: int
    N: int
    free_tf: bool
    t0: float = 0.0
    tf_fixed: float | None = None

    @property
    def size(self) -> int:
        return (self.n + self.m) * self.N + int(self.free_tf)

    @classmethod
    def for_problem(cls, problem: ProblemModel, N: int) -> "Layout":
        return cls(problem.n, problem.m, N, problem.free_terminal_time, problem.t0, problem.terminal_time)


def pack_state(traj: TrajectoryGrid, free_tf: bool) -> np.ndarray:
    """``[x row-major | u row-major | tf if free]``."""
    parts = [traj.x.ravel(), traj.u.ravel()]
    if free_tf:
        parts.append([traj.tf])
    return np.concatenate(parts)


def unpack_state(y: np.ndarray, layout: Layout) -> TrajectoryGrid:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size != layout.size:
        raise LayoutError(f"expected a flat vector of length {layout.size}, got shape {y.shape}")
    nx = layout.n * layout.N
    nu = layout.m * layout.N
    x = y[:nx].reshape(layout.n, layout.N)
    u = y[nx : nx + nu].reshape(layout.m, layout.N)
    tf = y[-1] if layout.free_tf else layout.tf_fixed
    return TrajectoryGrid(x=x, u=u, tf=tf, t0=layout.t0)


def _pack_rates(bundle: RateBundle, free_tf: bool) -> np.ndarray:
    r = bundle.rates
    parts = [r.dx.ravel(), r.du.ravel()]
    if free_tf:
        parts.append([r.dtf])
    return np.concatenate(parts)


def grid_motion_terms(bundle: RateBundle) -> tuple[np.ndarray, np.ndarray]:
    """Rates induced on fixed nodes by stretching the grid with ``dtf``."""
    traj, dtf = bundle.traj, bundle.rates.dtf
    s = np.arange(traj.N) / (traj.N - 1)
    xdot = bundle.nodes.f.T
    udot = np.gradient(traj.u, traj.h, axis=1, edge_order=2)
    return s * xdot * dtf, s * udot * dtf


def evaluate_epde(
    problem: ProblemModel,
    traj: TrajectoryGrid,
    gains: GainConfig,
    moving_grid: MovingGrid = MovingGrid.CONVECTIVE,
    substeps: int = 1,
) -> tuple[np.ndarray, RateBundle]:
    """Packed right side of the semi-discrete evolution and the bundle behind it."""
    bundle = compute_rates(problem, traj, gains, substeps)
    rhs = _pack_rates(bundle, problem.free_terminal_time)
    if problem.free_terminal_time and moving_grid is MovingGrid.CONVECTIVE:
        cx, cu = grid_motion_terms(bundle)
        nx, nu = problem.n * traj.N, problem.m * traj.N
        rhs[:nx] += cx.ravel()
        rhs[nx : nx + nu] += cu.ravel()
    return rhs, bundle


def epde_rhs(
    problem: ProblemModel,
    y: np.ndarray,
    gains: GainConfig,
    N: int,
    moving_grid: MovingGrid = MovingGrid.CONVECTIVE,
) -> np.ndarray:
    """Packed derivative of the packed state ``y`` with respect to variation time."""
    traj = unpack_state(y, Layout.for_problem(problem, N))
    return evaluate_epde(problem, traj, gains, moving_grid)[0]


def _record(problem: ProblemModel, tau: float, traj: TrajectoryGrid, bundle: RateBundle) -> SnapshotRecord:
    from .diagnostics import optimality_residuals

    res_u, res_tf = optimality_residuals(problem, traj, bundle.ts, bundle.gf, bundle.ms.pi, bundle.nodes)
    dyn_res, g_res = feasibility_residual(problem, traj)
    return SnapshotRecord(
        tau=float(tau),
        J=evaluate_cost(problem, traj),
        res_u=res_u,
        res_tf=res_tf,
        pi=bundle.ms.pi.copy(),
        tf=traj.tf,
        g_drift=g_res,
        dyn_res=dyn_res,
    )


def evolve(
    problem: ProblemModel,
    init: TrajectoryGrid,
    gains: GainConfig,
    cfg: EvolutionConfig = EvolutionConfig(),
) -> SolveReport:
    """Evolve a feasible initial trajectory toward the optimum.

    Snapshots are taken every ``cfg.snapshot_every`` units of variation time.
    The solve stops early once both optimality residuals drop below
    ``cfg.residual_tol`` at a snapshot.
    """
    if problem.terminal_time is not None and not np.isclose(init.tf, problem.terminal_time, rtol=0, atol=1e-12):
        raise ValueError("initial trajectory does not use the problem's fixed terminal time")
    dyn0, g0 = feasibility_residual(problem, init)
    if dyn0 > cfg.feasibility_tol or g0 > cfg.feasibility_tol:
        raise InfeasibleInitError(
            f"initial trajectory infeasible: dynamics residual {dyn0:.3e}, "
            f"constraint residual {g0:.3e}, tolerance {cfg.feasibility_tol:.3e}"
        )
    start = time.perf_counter()
    free_tf = problem.free_terminal_time
    layout = Layout.for_problem(problem, init.N)
    report = SolveReport()
    nfev = 0

    def fun(_tau, y):
        nonlocal nfev
        nfev += 1
        traj = unpack_state(y, layout)
        rhs, _ = evaluate_epde(problem, traj, gains, cfg.moving_grid, cfg.transition_substeps)
        if not np.all(np.isfinite(rhs)):
            raise FloatingPointError("non-finite evolution rate")
        return rhs

    def take_snapshot(tau, y) -> bool:
        """Record a snapshot; return True when the solve should stop."""
        traj = unpack_state(y, layout)
        _, bundle = evaluate_epde(problem, traj, gains, cfg.moving_grid, cfg.transition_substeps)
        rec = _record(problem, tau, traj, bundle)
        report.records.append(rec)
        report.snapshots.append(traj)
        limit = 10.0 * cfg.feasibility_tol
        if rec.g_drift > limit or rec.dyn_res > limit:
            report.stop_reason = StopReason.FEASIBILITY_LOST
            report.message = (
                f"feasibility lost at tau={tau:g}: constraint drift {rec.g_drift:.3e}, "
                f"dynamics residual {rec.dyn_res:.3e}"
            )
            return True
        if rec.res_u < cfg.residual_tol and rec.res_tf < cfg.residual_tol:
            report.stop_reason = StopReason.RESIDUAL_MET
            report.message = f"optimality residuals below {cfg.residual_tol:g} at tau={tau:g}"
            return True
        return False

    y0 = pack_state(init, free_tf)
    try:
        stop = take_snapshot(0.0, y0)
    except (VarevoError, FloatingPointError, np.linalg.LinAlgError, ValueError) as exc:
        report.stop_reason = StopReason.DIVERGED
        report.message = f"rates failed at the initial trajectory: {exc}"
        stop = True
        report.records.clear()
        report.snapshots.clear()
        report.snapshots.append(init)
    if stop or cfg.tau_max == 0.0:
        report.wall_time = time.perf_counter() - start
        if not stop:
            report.stop_reason = StopReason.TAU_MAX_REACHED
            report.message = "tau_max reached"
        return report

    n_snap = int(np.floor(cfg.tau_max / cfg.snapshot_every + 1e-9))
    targets = [k * cfg.snapshot_every for k in range(1, n_snap + 1)]
    if not targets or targets[-1] < cfg.tau_max * (1 - 1e-12):
        targets.append(cfg.tau_max)
    solver = RK45(fun, 0.0, y0, cfg.tau_max, rtol=cfg.rel_tol, atol=cfg.abs_tol)
    pending = iter(targets)
    tau_next = next(pending)
    report.stop_reason = StopReason.TAU_MAX_REACHED
    report.message = "tau_max reached"
    try:
        while tau_next is not None:
            msg = solver.step()
            if solver.status == "failed":
                report.stop_reason = StopReason.DIVERGED
                report.message = f"integrator failed: {msg}"
                break
            dense = None
            while tau_next is not None and tau_next <= solver.t:
                if tau_next == solver.t:
                    y = solver.y
                else:
                    dense = dense or solver.dense_output()
                    y = dense(tau_next)
                if take_snapshot(tau_next, y):
                    tau_next = None
                    break
                tau_next = next(pending, None)
    except (VarevoError, FloatingPointError, np.linalg.LinAlgError, ValueError) as exc:
        report.stop_reason = StopReason.DIVERGED
        report.message = f"evolution aborted: {type(exc).__name__}: {exc}"
        log.warning(report.message)
    report.nfev = nfev
    report.wall_time = time.perf_counter() - start
    return report
