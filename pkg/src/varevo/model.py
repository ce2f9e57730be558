"""Problem authoring interface and the discretized trajectory.

A :class:`ProblemModel` bundles the dynamics, cost and terminal constraint of
an optimal control problem together with the exact partial derivatives the
evolution equations consume.  A :class:`TrajectoryGrid` holds nodal states and
controls on a uniform grid over ``[t0, tf]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EvaluationError

Array = np.ndarray

#: Smallest admissible horizon length ``tf - t0``.
TF_FLOOR = 1e-6


def _zero_scalar(*_args) -> float:
    return 0.0


@dataclass
class ProblemModel:
    """Optimal control problem with terminal constraint ``g(x(tf), tf) = 0``.

    Evaluator signatures: ``f(x, u, t)``, ``L(x, u, t)`` and their partials
    take the state, control and time; ``phi(x, t)`` and ``g(x, t)`` take the
    state and time.  Terms left as ``None`` are identically zero (so are their
    partials).  ``q = 0`` when no constraint is given, which recovers the
    free-terminal-state problem.

    ``terminal_time`` is ``None`` for a free terminal time; a number fixes it.
    """

    n: int
    m: int
    x0: Array
    f: Callable
    f_x: Callable
    f_u: Callable
    t0: float = 0.0
    terminal_time: Optional[float] = None
    L: Optional[Callable] = None
    L_x: Optional[Callable] = None
    L_u: Optional[Callable] = None
    phi: Optional[Callable] = None
    phi_x: Optional[Callable] = None
    phi_t: Optional[Callable] = None
    phi_tx: Optional[Callable] = None
    phi_xx: Optional[Callable] = None
    g: Optional[Callable] = None
    g_x: Optional[Callable] = None
    g_t: Optional[Callable] = None
    q: int = 0
    name: str = "problem"

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).reshape(self.n)
        self.t0 = float(self.t0)
        if self.terminal_time is not None:
            self.terminal_time = float(self.terminal_time)
            if self.terminal_time <= self.t0 + TF_FLOOR:
                raise ValueError("fixed terminal time must exceed t0")
        n, m = self.n, self.m
        zn = lambda *a: np.zeros(n)  # noqa: E731
        if self.L is None:
            self.L, self.L_x, self.L_u = _zero_scalar, zn, lambda *a: np.zeros(m)
        if self.phi is None:
            self.phi, self.phi_t = _zero_scalar, _zero_scalar
            self.phi_x, self.phi_tx = zn, zn
            self.phi_xx = lambda *a: np.zeros((n, n))
        if self.g is None:
            self.q = 0
            self.g = lambda *a: np.zeros(0)
            self.g_x = lambda *a: np.zeros((0, n))
            self.g_t = lambda *a: np.zeros(0)
        missing = [
            name
            for name in ("L_x", "L_u", "phi_x", "phi_t", "phi_tx", "phi_xx", "g_x", "g_t")
            if getattr(self, name) is None
        ]
        if missing:
            raise ValueError(f"missing partial derivatives: {', '.join(missing)}")
        self._probe()

    @property
    def free_terminal_time(self) -> bool:
        return self.terminal_time is None

    def _probe(self):
        """Evaluate every callback once at ``(x0, 0, t0)`` to validate shapes."""
        x, u, t = self.x0, np.zeros(self.m), self.t0
        n, m, q = self.n, self.m, self.q
        checks = [
            ("f", self.f(x, u, t), (n,)),
            ("f_x", self.f_x(x, u, t), (n, n)),
            ("f_u", self.f_u(x, u, t), (n, m)),
            ("L", self.L(x, u, t), ()),
            ("L_x", self.L_x(x, u, t), (n,)),
            ("L_u", self.L_u(x, u, t), (m,)),
            ("phi", self.phi(x, t), ()),
            ("phi_x", self.phi_x(x, t), (n,)),
            ("phi_t", self.phi_t(x, t), ()),
            ("phi_tx", self.phi_tx(x, t), (n,)),
            ("phi_xx", self.phi_xx(x, t), (n, n)),
            ("g", self.g(x, t), (q,)),
            ("g_x", self.g_x(x, t), (q, n)),
            ("g_t", self.g_t(x, t), (q,)),
        ]
        for name, value, shape in checks:
            _checked(value, shape, name)


def _checked(value, shape, name) -> Array:
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        if arr.size == int(np.prod(shape)):
            arr = arr.reshape(shape)
        else:
            raise EvaluationError(f"{name} returned shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise EvaluationError(f"{name} returned a non-finite value")
    return arr


@dataclass(frozen=True)
class TrajectoryGrid:
    """Nodal states ``x`` (n x N) and controls ``u`` (m x N) on a uniform grid."""

    x: Array
    u: Array
    tf: float
    t0: float = 0.0

    def __post_init__(self):
        x = np.array(self.x, dtype=float, ndmin=2)
        u = np.array(self.u, dtype=float, ndmin=2)
        if x.shape[1] != u.shape[1]:
            raise ValueError("x and u must have the same number of nodes")
        if x.shape[1] < 3:
            raise ValueError("a trajectory needs at least 3 nodes")
        if not self.tf > self.t0 + TF_FLOOR:
            raise ValueError(f"terminal time {self.tf} is not above t0 + {TF_FLOOR}")
        x.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "tf", float(self.tf))
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def N(self) -> int:
        return self.x.shape[1]

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def m(self) -> int:
        return self.u.shape[0]

    @property
    def h(self) -> float:
        """Node spacing."""
        return (self.tf - self.t0) / (self.N - 1)

    @property
    def times(self) -> Array:
        s = np.arange(self.N) / (self.N - 1)
        return self.t0 + s * (self.tf - self.t0)

    def replace(self, **changes) -> "TrajectoryGrid":
        kw = dict(x=self.x, u=self.u, tf=self.tf, t0=self.t0)
        kw.update(changes)
        return TrajectoryGrid(**kw)


@dataclass(frozen=True)
class GainConfig:
    """Evolution gains: ``K`` (m x m, SPD) for the control, ``k_tf`` for ``tf``."""

    K: Array
    k_tf: float = 0.05

    def __post_init__(self):
        K = np.array(self.K, dtype=float, ndmin=2)
        if K.shape[0] != K.shape[1]:
            raise ValueError("K must be square")
        if not np.allclose(K, K.T, rtol=1e-12, atol=0.0):
            raise ValueError("K must be symmetric")
        try:
            np.linalg.cholesky(K)
        except np.linalg.LinAlgError:
            raise ValueError("K must be positive definite") from None
        if not self.k_tf > 0:
            raise ValueError("k_tf must be positive")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "k_tf", float(self.k_tf))

    @classmethod
    def scalar(cls, m: int, k: float = 0.1, k_tf: float = 0.05) -> "GainConfig":
        return cls(k * np.eye(m), k_tf)


def trapezoid_weights(N: int, h: float) -> Array:
    w = np.full(N, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass
class NodeEval:
    """Problem callbacks evaluated at every node, stored node-major."""

    t: Array  # (N,)
    f: Array  # (N, n)
    f_x: Array  # (N, n, n)
    f_u: Array  # (N, n, m)
    L: Array  # (N,)
    L_x: Array  # (N, n)
    L_u: Array  # (N, m)
    phi_x: Array  # (N, n)
    phi_tx: Array  # (N, n)
    phi_xx: Array  # (N, n, n)
    # terminal quantities at (x(tf), tf)
    phi_f: float = 0.0
    phi_t_f: float = 0.0
    g_f: Array = field(default_factory=lambda: np.zeros(0))
    g_x_f: Array = field(default_factory=lambda: np.zeros((0, 0)))
    g_t_f: Array = field(default_factory=lambda: np.zeros(0))

    @property
    def hamiltonian_rate_f(self) -> float:
        """``L + phi_t + phi_x . f`` at the terminal node."""
        return float(self.L[-1] + self.phi_t_f + self.phi_x[-1] @ self.f[-1])

    @property
    def constraint_rate_f(self) -> Array:
        """``g_x f + g_t`` at the terminal node."""
        return self.g_x_f @ self.f[-1] + self.g_t_f


def evaluate_nodes(problem: ProblemModel, traj: TrajectoryGrid) -> NodeEval:
    """Evaluate all callbacks along ``traj``; non-finite output raises."""
    _check_dims(problem, traj)
    n, m, N = problem.n, problem.m, traj.N
    t = traj.times
    X, U = traj.x.T, traj.u.T
    P = problem
    f = np.array([P.f(X[i], U[i], t[i]) for i in range(N)], dtype=float).reshape(N, n)
    fx = np.array([P.f_x(X[i], U[i], t[i]) for i in range(N)], dtype=float).reshape(N, n, n)
    fu = np.array([P.f_u(X[i], U[i], t[i]) for i in range(N)], dtype=float).reshape(N, n, m)
    L = np.array([P.L(X[i], U[i], t[i]) for i in range(N)], dtype=float).reshape(N)
    Lx = np.array([P.L_x(X[i], U[i], t[i]) for i in range(N)], dtype=float).reshape(N, n)
    Lu = np.array([P.L_u(X[i], U[i], t[i]) for i in range(N)], dtype=float).reshape(N, m)
    px = np.array([P.phi_x(X[i], t[i]) for i in range(N)], dtype=float).reshape(N, n)
    ptx = np.array([P.phi_tx(X[i], t[i]) for i in range(N)], dtype=float).reshape(N, n)
    pxx = np.array([P.phi_xx(X[i], t[i]) for i in range(N)], dtype=float).reshape(N, n, n)
    xf, tf = X[-1], traj.tf
    q = P.q
    ev = NodeEval(
        t=t, f=f, f_x=fx, f_u=fu, L=L, L_x=Lx, L_u=Lu,
        phi_x=px, phi_tx=ptx, phi_xx=pxx,
        phi_f=float(_checked(P.phi(xf, tf), (), "phi")),
        phi_t_f=float(_checked(P.phi_t(xf, tf), (), "phi_t")),
        g_f=_checked(P.g(xf, tf), (q,), "g"),
        g_x_f=_checked(P.g_x(xf, tf), (q, n), "g_x"),
        g_t_f=_checked(P.g_t(xf, tf), (q,), "g_t"),
    )
    for name in ("f", "f_x", "f_u", "L", "L_x", "L_u", "phi_x", "phi_tx", "phi_xx"):
        if not np.all(np.isfinite(getattr(ev, name))):
            raise EvaluationError(f"{name} returned a non-finite value")
    return ev


def _check_dims(problem: ProblemModel, traj: TrajectoryGrid):
    if traj.n != problem.n or traj.m != problem.m:
        raise ValueError(
            f"trajectory dims (n={traj.n}, m={traj.m}) do not match "
            f"problem (n={problem.n}, m={problem.m})"
        )


def evaluate_cost(problem: ProblemModel, traj: TrajectoryGrid) -> float:
    """Bolza cost: terminal cost plus trapezoidal quadrature of the running cost."""
    _check_dims(problem, traj)
    t = traj.times
    L = np.array([problem.L(traj.x[:, i], traj.u[:, i], t[i]) for i in range(traj.N)], dtype=float)
    phi = float(np.asarray(problem.phi(traj.x[:, -1], traj.tf), dtype=float))
    J = phi + float(trapezoid_weights(traj.N, traj.h) @ L)
    if not np.isfinite(J):
        raise EvaluationError("cost is not finite")
    return J


def feasibility_residual(problem: ProblemModel, traj: TrajectoryGrid) -> tuple[float, float]:
    """Return ``(dyn_res, g_res)``.

    ``dyn_res`` is the largest infinity-norm mismatch between the central
    difference of the nodal states and the dynamics at interior nodes;
    ``g_res`` is the infinity norm of the terminal constraint (0 when q = 0).
    """
    _check_dims(problem, traj)
    t = traj.times
    xdot = (traj.x[:, 2:] - traj.x[:, :-2]) / (2.0 * traj.h)
    f = np.array(
        [problem.f(traj.x[:, i], traj.u[:, i], t[i]) for i in range(1, traj.N - 1)], dtype=float
    ).reshape(traj.N - 2, problem.n)
    dyn_res = float(np.max(np.abs(xdot.T - f)))
    if problem.q == 0:
        return dyn_res, 0.0
    g = np.asarray(problem.g(traj.x[:, -1], traj.tf), dtype=float)
    return dyn_res, float(np.max(np.abs(g)))
