"""Benchmark problems, their feasible initial trajectories, and a gradient oracle."""

from __future__ import annotations

import enum
import math
import warnings

import numpy as np

from .model import ProblemModel, TrajectoryGrid, evaluate_cost

GRAVITY = 10.0
#: Substeps per node interval for the fixed-step RK4 used by initializers and the oracle.
RK4_SUBSTEPS = 10
#: Terminal time reported for the brachistochrone by an independent pseudospectral solver.
BRACHISTOCHRONE_REFERENCE_TF = 0.8165
#: Converged terminal multiplier reported for the brachistochrone.
BRACHISTOCHRONE_REFERENCE_PI = (-0.1477, 0.0564)


class BuiltinProblem(enum.Enum):
    DOUBLE_INTEGRATOR = "double-integrator"
    BRACHISTOCHRONE = "brachistochrone"


def double_integrator() -> ProblemModel:
    """Minimum-energy transfer of a double integrator from (1, 1) to the origin in 2 s."""
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    b = np.array([[0.0], [1.0]])
    return ProblemModel(
        n=2,
        m=1,
        q=2,
        x0=[1.0, 1.0],
        t0=0.0,
        terminal_time=2.0,
        f=lambda x, u, t: A @ x + b[:, 0] * u[0],
        f_x=lambda x, u, t: A,
        f_u=lambda x, u, t: b,
        L=lambda x, u, t: 0.5 * u[0] ** 2,
        L_x=lambda x, u, t: np.zeros(2),
        L_u=lambda x, u, t: np.array([u[0]]),
        g=lambda x, t: np.asarray(x, dtype=float).copy(),
        g_x=lambda x, t: np.eye(2),
        g_t=lambda x, t: np.zeros(2),
        name="double-integrator",
    )


def brachistochrone() -> ProblemModel:
    """Fastest descent from (0, 0) at rest to (2, -2); state ``[x, y, V]``, cost ``tf``."""

    def f(x, u, t):
        V, s, c = x[2], math.sin(u[0]), math.cos(u[0])
        return np.array([V * s, -V * c, GRAVITY * c])

    def f_x(x, u, t):
        s, c = math.sin(u[0]), math.cos(u[0])
        return np.array([[0.0, 0.0, s], [0.0, 0.0, -c], [0.0, 0.0, 0.0]])

    def f_u(x, u, t):
        V, s, c = x[2], math.sin(u[0]), math.cos(u[0])
        return np.array([[V * c], [V * s], [-GRAVITY * s]])

    gx = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    return ProblemModel(
        n=3,
        m=1,
        q=2,
        x0=[0.0, 0.0, 0.0],
        t0=0.0,
        terminal_time=None,
        f=f,
        f_x=f_x,
        f_u=f_u,
        phi=lambda x, t: float(t),
        phi_x=lambda x, t: np.zeros(3),
        phi_t=lambda x, t: 1.0,
        phi_tx=lambda x, t: np.zeros(3),
        phi_xx=lambda x, t: np.zeros((3, 3)),
        g=lambda x, t: np.array([x[0] - 2.0, x[1] + 2.0]),
        g_x=lambda x, t: gx,
        g_t=lambda x, t: np.zeros(2),
        name="brachistochrone",
    )


def builtin(tag: BuiltinProblem | str) -> ProblemModel:
    tag = BuiltinProblem(tag)
    if tag is BuiltinProblem.DOUBLE_INTEGRATOR:
        return double_integrator()
    return brachistochrone()


def _rk4_step(rhs, t, x, dt):
    k1 = rhs(t, x)
    k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = rhs(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def feedback_control(x, t):
    """Time-varying PD law with damping 0.707 and natural frequency ``5 t``."""
    wn = 5.0 * t
    return -(wn**2) * x[0] - 2.0 * wn * 0.707 * x[1]


def init_feedback_double_integrator(N: int = 41, feasibility_tol: float = 0.1) -> TrajectoryGrid:
    """Closed-loop trajectory of the double integrator under :func:`feedback_control`.

    The law only steers the state close to the origin; a warning is issued when
    the terminal miss exceeds ``feasibility_tol``.
    """
    if N < 3:
        raise ValueError("N must be at least 3")
    tf = 2.0
    t = np.linspace(0.0, tf, N)
    dt = (t[1] - t[0]) / RK4_SUBSTEPS

    def rhs(tt, x):
        return np.array([x[1], feedback_control(x, tt)])

    X = np.empty((2, N))
    X[:, 0] = x = np.array([1.0, 1.0])
    for i in range(N - 1):
        tt = t[i]
        for _ in range(RK4_SUBSTEPS):
            x = _rk4_step(rhs, tt, x, dt)
            tt += dt
        X[:, i + 1] = x
    U = np.array([[feedback_control(X[:, i], t[i]) for i in range(N)]])
    miss = float(np.max(np.abs(X[:, -1])))
    if miss > feasibility_tol:
        warnings.warn(
            f"feedback initializer misses the target by {miss:.2e} (tolerance {feasibility_tol:.0e})",
            stacklevel=2,
        )
    return TrajectoryGrid(x=X, u=U, tf=tf)


def init_straightline_brachistochrone(N: int = 101) -> TrajectoryGrid:
    """Uniformly accelerated slide along the straight chord to (2, -2)."""
    if N < 3:
        raise ValueError("N must be at least 3")
    tf = math.sqrt(0.8)
    t = np.linspace(0.0, tf, N)
    X = np.vstack([2.5 * t**2, -2.5 * t**2, 5.0 * math.sqrt(2.0) * t])
    X[:, -1] = [2.0, -2.0, 5.0 * math.sqrt(2.0) * tf]
    U = np.full((1, N), math.pi / 4)
    return TrajectoryGrid(x=X, u=U, tf=tf)


def double_integrator_optimum(t: np.ndarray) -> dict[str, np.ndarray]:
    """Closed-form optimal states, costates and control of the double integrator."""
    t = np.asarray(t, dtype=float)
    return {
        "x1": 0.5 * t**3 - 1.75 * t**2 + t + 1.0,
        "x2": 1.5 * t**2 - 3.5 * t + 1.0,
        "lam1": np.full_like(t, 3.0),
        "lam2": -3.0 * t + 3.5,
        "u": 3.0 * t - 3.5,
    }


def double_integrator_optimal_grid(N: int) -> TrajectoryGrid:
    t = np.linspace(0.0, 2.0, N)
    opt = double_integrator_optimum(t)
    return TrajectoryGrid(x=np.vstack([opt["x1"], opt["x2"]]), u=opt["u"][None, :], tf=2.0)


def integrate_open_loop(problem: ProblemModel, traj: TrajectoryGrid, u: np.ndarray) -> np.ndarray:
    """States from ``x0`` under nodal controls ``u`` (linearly interpolated); (n, N)."""
    t = traj.times
    N = traj.N
    dt = traj.h / RK4_SUBSTEPS
    X = np.empty((problem.n, N))
    X[:, 0] = x = problem.x0.copy()
    for i in range(N - 1):
        u0, u1 = u[:, i], u[:, i + 1]

        def rhs(tt, xx, u0=u0, u1=u1, ti=t[i]):
            theta = (tt - ti) / traj.h
            return np.asarray(problem.f(xx, u0 + theta * (u1 - u0), tt), dtype=float)

        tt = t[i]
        for _ in range(RK4_SUBSTEPS):
            x = _rk4_step(rhs, tt, x, dt)
            tt += dt
        X[:, i + 1] = x
    return X


def finite_difference_gradient_oracle(
    problem: ProblemModel, traj: TrajectoryGrid, node: int, component: int, h: float = 1e-4
) -> float:
    """Functional derivative of the cost with respect to ``u_component`` at ``node``.

    The control is bumped by a nodal hat of height ``h``, the state is
    re-integrated from ``x0`` with ``tf`` frozen, and the central difference of
    the cost is divided by ``h`` times the hat's trapezoidal mass.
    """
    if not h > 0:
        raise ValueError("bump size must be positive")
    N = traj.N
    if not 0 <= node < N:
        raise IndexError("node out of range")
    mass = traj.h * (0.5 if node in (0, N - 1) else 1.0)
    costs = []
    for sign in (1.0, -1.0):
        u = np.array(traj.u, dtype=float)
        u[component, node] += sign * h
        x = integrate_open_loop(problem, traj, u)
        costs.append(evaluate_cost(problem, traj.replace(x=x, u=u)))
    return (costs[0] - costs[1]) / (2.0 * h * mass)
