"""Optimality residuals, costate reconstruction and classical-condition checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import GradientField, constraint_sensitivity, corrected_gradient, terminal_residual
from .model import NodeEval, ProblemModel, TrajectoryGrid, evaluate_nodes, trapezoid_weights
from .transition import TransitionSet, build_from_jacobians


@dataclass(frozen=True)
class CostateTrajectory:
    """Costates rebuilt from primal data, the terminal multiplier and the Hamiltonian."""

    gamma: np.ndarray  # (n, N)
    pi: np.ndarray  # (q,)
    H: np.ndarray  # (N,)


@dataclass(frozen=True)
class ClassicalReport:
    """Residuals of the classical first-order conditions evaluated with the rebuilt costates.

    ``costate_ode``: central difference of gamma plus ``L_x + f_x^T gamma`` at
    interior nodes.  ``h_u``: ``L_u + f_u^T gamma`` at every node.
    ``transversality_time``: ``H + phi_t + pi^T g_t`` at ``tf``.
    ``transversality_state``: ``gamma(tf) - phi_x - g_x^T pi``.
    """

    costate_ode: float
    h_u: float
    transversality_time: float
    transversality_state: float

    def as_dict(self) -> dict:
        return {
            "costate_ode": self.costate_ode,
            "h_u": self.h_u,
            "transversality_time": self.transversality_time,
            "transversality_state": self.transversality_state,
        }


def _prepare(problem, traj, ts, nodes):
    if nodes is None:
        nodes = evaluate_nodes(problem, traj)
    if ts is None:
        ts = build_from_jacobians(nodes.f_x, traj.h)
    return ts, nodes


def reconstruct_costates(
    problem: ProblemModel,
    traj: TrajectoryGrid,
    ts: TransitionSet,
    gf: GradientField,
    pi: np.ndarray,
    nodes: Optional[NodeEval] = None,
) -> CostateTrajectory:
    """``gamma(t) = phi_x + Phi(tf,t)^T g_x^T pi + tail(t)`` at every node.

    ``tail`` is the transported integral already held by ``gf``.
    """
    ts, nodes = _prepare(problem, traj, ts, nodes)
    pi = np.asarray(pi, dtype=float)
    gamma = nodes.phi_x.T + gf.tail
    if pi.size:
        Phi_f = ts.to_final()
        gamma = gamma + np.einsum("iba,qb,q->ai", Phi_f, nodes.g_x_f, pi)
    H = nodes.L + np.einsum("ai,ia->i", gamma, nodes.f)
    return CostateTrajectory(gamma=gamma, pi=pi.copy(), H=H)


def optimality_residuals(
    problem: ProblemModel,
    traj: TrajectoryGrid,
    ts: TransitionSet,
    gf: GradientField,
    pi: np.ndarray,
    nodes: Optional[NodeEval] = None,
) -> tuple[float, float]:
    """``(res_u, res_tf)``; ``res_tf`` is 0 for a fixed terminal time."""
    ts, nodes = _prepare(problem, traj, ts, nodes)
    pi = np.asarray(pi, dtype=float)
    res_u = float(np.max(np.abs(corrected_gradient(nodes, ts, gf, pi))))
    res_tf = abs(terminal_residual(nodes, pi)) if problem.free_terminal_time else 0.0
    return res_u, float(res_tf)


def classical_condition_check(
    problem: ProblemModel,
    ct: CostateTrajectory,
    traj: TrajectoryGrid,
    nodes: Optional[NodeEval] = None,
) -> ClassicalReport:
    if nodes is None:
        nodes = evaluate_nodes(problem, traj)
    g = ct.gamma
    dg = (g[:, 2:] - g[:, :-2]) / (2.0 * traj.h)
    ode = dg + (nodes.L_x + np.einsum("iba,bi->ia", nodes.f_x, g))[1:-1].T
    h_u = nodes.L_u.T + np.einsum("ibm,bi->mi", nodes.f_u, g)
    trans_t = ct.H[-1] + nodes.phi_t_f
    trans_x = g[:, -1] - nodes.phi_x[-1]
    if ct.pi.size:
        trans_t += float(ct.pi @ nodes.g_t_f)
        trans_x = trans_x - nodes.g_x_f.T @ ct.pi
    if not problem.free_terminal_time:
        # with tf fixed there is no terminal-time condition to satisfy
        trans_t = 0.0
    return ClassicalReport(
        costate_ode=float(np.max(np.abs(ode))),
        h_u=float(np.max(np.abs(h_u))),
        transversality_time=float(abs(trans_t)),
        transversality_state=float(np.max(np.abs(trans_x), initial=0.0)),
    )


def stationarity_check(
    problem: ProblemModel,
    traj: TrajectoryGrid,
    ts: TransitionSet,
    gf: GradientField,
    pi: np.ndarray,
    nodes: Optional[NodeEval] = None,
) -> float:
    """Gain-free stacked residual for the multiplier.

    Returns ``||A pi + b||_inf / (1 + ||b||_inf)`` where ``A`` stacks the
    unit-gain Gram matrix and (for a free terminal time) the terminal outer
    product, and ``b`` the matching right-hand sides.
    """
    if problem.q == 0:
        return 0.0
    ts, nodes = _prepare(problem, traj, ts, nodes)
    pi = np.asarray(pi, dtype=float)
    wq = trapezoid_weights(traj.N, traj.h)
    G = constraint_sensitivity(nodes, ts)
    M1 = np.einsum("i,iqm,ipm->qp", wq, G, G)
    r1 = np.einsum("i,iqm,mi->q", wq, G, gf.p_u)
    A, b = [M1], [r1]
    if problem.free_terminal_time:
        c = nodes.constraint_rate_f
        A.append(np.outer(c, c))
        b.append(c * nodes.hamiltonian_rate_f)
    A, b = np.vstack(A), np.concatenate(b)
    return float(np.max(np.abs(A @ pi + b)) / (1.0 + np.max(np.abs(b))))


def bridge_residual(
    problem: ProblemModel,
    traj: TrajectoryGrid,
    ts: TransitionSet,
    gf: GradientField,
    ct: CostateTrajectory,
    nodes: Optional[NodeEval] = None,
) -> float:
    """Largest gap between ``L_u + f_u^T gamma`` and the corrected gradient."""
    ts, nodes = _prepare(problem, traj, ts, nodes)
    lhs = nodes.L_u.T + np.einsum("ibm,bi->mi", nodes.f_u, ct.gamma)
    rhs = corrected_gradient(nodes, ts, gf, ct.pi)
    return float(np.max(np.abs(lhs - rhs)))


def endpoint_residual(problem: ProblemModel, ct: CostateTrajectory, nodes: NodeEval) -> float:
    """``|gamma(tf) - phi_x(tf) - g_x^T pi|_inf``."""
    expected = nodes.phi_x[-1].copy()
    if ct.pi.size:
        expected = expected + nodes.g_x_f.T @ ct.pi
    return float(np.max(np.abs(ct.gamma[:, -1] - expected)))
