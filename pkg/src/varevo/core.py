"""Gradient field, terminal multiplier system and the evolution rates.

Everything here is a pure function of one trajectory snapshot.  Integrals over
physical time use the trapezoidal rule on the node grid; the state rate is
obtained by marching the linear variational ODE with RK4.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import ControllabilityError
from .model import (
    GainConfig,
    NodeEval,
    ProblemModel,
    TrajectoryGrid,
    evaluate_nodes,
    trapezoid_weights,
)
from .transition import TransitionSet, build_from_jacobians


@dataclass(frozen=True)
class GradientField:
    """Costate-free control gradient ``p_u`` and its ingredients.

    ``w`` is the inner integrand ``L_x + phi_tx + phi_xx^T f + f_x^T phi_x`` and
    ``tail[:, i]`` its transported integral from ``t_i`` to ``tf``.
    """

    p_u: np.ndarray  # (m, N)
    w: np.ndarray  # (n, N)
    tail: np.ndarray  # (n, N)


@dataclass(frozen=True)
class MultiplierSystem:
    """``M pi = -r`` for the terminal-constraint multiplier ``pi``."""

    M: np.ndarray  # (q, q)
    r: np.ndarray  # (q,)
    pi: np.ndarray  # (q,)
    singular: bool = False


@dataclass(frozen=True)
class EvolutionRates:
    """Derivatives with respect to variation time of the nodal unknowns."""

    du: np.ndarray  # (m, N)
    dx: np.ndarray  # (n, N)
    dtf: float
    pi: np.ndarray  # (q,)


def backward_cumtrapz(v: np.ndarray, h: float) -> np.ndarray:
    """``out[i] = integral of v from t_i to t_{N-1}`` along axis 0 (trapezoidal)."""
    seg = 0.5 * h * (v[1:] + v[:-1])
    out = np.zeros_like(v)
    out[:-1] = np.cumsum(seg[::-1], axis=0)[::-1]
    return out


def constraint_sensitivity(nodes: NodeEval, ts: TransitionSet) -> np.ndarray:
    """``G[i] = g_x Phi(tf, t_i) f_u(t_i)``, shape (N, q, m)."""
    Phi_f = ts.to_final()
    return np.einsum("qa,iab,ibm->iqm", nodes.g_x_f, Phi_f, nodes.f_u)


def compute_gradient_field(
    problem: ProblemModel,
    traj: TrajectoryGrid,
    ts: TransitionSet,
    nodes: Optional[NodeEval] = None,
) -> GradientField:
    """Evaluate ``p_u`` at every node.

    The transported integral uses ``Phi(s, t_i)^T = Psi_inv[i]^T Psi[s]^T`` so a
    single backward cumulative sum serves all nodes.
    """
    if nodes is None:
        nodes = evaluate_nodes(problem, traj)
    w = (
        nodes.L_x
        + nodes.phi_tx
        + np.einsum("iba,ib->ia", nodes.phi_xx, nodes.f)
        + np.einsum("iba,ib->ia", nodes.f_x, nodes.phi_x)
    )
    v = np.einsum("iba,ib->ia", ts.Psi, w)
    sigma = backward_cumtrapz(v, traj.h)
    tail = np.einsum("iba,ib->ia", ts.Psi_inv, sigma)
    tail[-1] = 0.0
    p_u = nodes.L_u + np.einsum("ibm,ib->im", nodes.f_u, nodes.phi_x + tail)
    return GradientField(p_u=p_u.T.copy(), w=w.T.copy(), tail=tail.T.copy())


def assemble_multiplier_system(
    problem: ProblemModel,
    traj: TrajectoryGrid,
    ts: TransitionSet,
    gf: GradientField,
    gains: GainConfig,
    nodes: Optional[NodeEval] = None,
    raise_on_singular: bool = True,
) -> MultiplierSystem:
    """Assemble and solve ``M pi = -r``.

    With a fixed terminal time the ``k_tf`` terms are dropped.  A singular
    ``M`` raises :class:`ControllabilityError` unless ``raise_on_singular`` is
    false, in which case ``pi`` is NaN and ``singular`` is set.
    """
    q = problem.q
    if q == 0:
        return MultiplierSystem(np.zeros((0, 0)), np.zeros(0), np.zeros(0))
    if nodes is None:
        nodes = evaluate_nodes(problem, traj)
    wq = trapezoid_weights(traj.N, traj.h)
    G = constraint_sensitivity(nodes, ts)
    GK = G @ gains.K
    M = np.einsum("i,iqm,ipm->qp", wq, GK, G)
    r = np.einsum("i,iqm,mi->q", wq, GK, gf.p_u)
    if problem.free_terminal_time:
        c = nodes.constraint_rate_f
        M = M + gains.k_tf * np.outer(c, c)
        r = r + gains.k_tf * c * nodes.hamiltonian_rate_f
    M = 0.5 * (M + M.T)

    zero_rows = np.flatnonzero(~np.any(nodes.g_x_f != 0.0, axis=1))
    singular = zero_rows.size > 0
    if not singular:
        cond = np.linalg.cond(M)
        singular = not np.isfinite(cond) or cond * np.finfo(float).eps >= 1.0
    if singular:
        if raise_on_singular:
            if zero_rows.size:
                raise ControllabilityError(
                    f"terminal constraint rows {zero_rows.tolist()} have zero state gradient"
                )
            raise ControllabilityError("multiplier matrix is singular to working precision")
        return MultiplierSystem(M, r, np.full(q, np.nan), singular=True)
    pi = np.linalg.solve(M, -r)
    return MultiplierSystem(M, r, pi)


def control_and_tf_rates(
    problem: ProblemModel,
    traj: TrajectoryGrid,
    ts: TransitionSet,
    gf: GradientField,
    ms: MultiplierSystem,
    gains: GainConfig,
    nodes: Optional[NodeEval] = None,
) -> tuple[np.ndarray, float]:
    """Control rate (m x N) and terminal-time rate for the given multiplier."""
    if nodes is None:
        nodes = evaluate_nodes(problem, traj)
    direction = corrected_gradient(nodes, ts, gf, ms.pi)
    du = -(gains.K @ direction)
    if not problem.free_terminal_time:
        return du, 0.0
    dtf = -gains.k_tf * terminal_residual(nodes, ms.pi)
    return du, float(dtf)


def corrected_gradient(
    nodes: NodeEval, ts: TransitionSet, gf: GradientField, pi: np.ndarray
) -> np.ndarray:
    """``p_u + f_u^T Phi(tf, t)^T g_x^T pi`` at every node, (m, N)."""
    if pi.size == 0:
        return gf.p_u.copy()
    G = constraint_sensitivity(nodes, ts)
    return gf.p_u + np.einsum("iqm,q->mi", G, pi)


def terminal_residual(nodes: NodeEval, pi: np.ndarray) -> float:
    """``L + phi_t + phi_x^T f + pi^T (g_x f + g_t)`` at ``tf``."""
    val = nodes.hamiltonian_rate_f
    if pi.size:
        val += float(pi @ nodes.constraint_rate_f)
    return float(val)


def state_rate(
    problem: ProblemModel,
    traj: TrajectoryGrid,
    du: np.ndarray,
    nodes: Optional[NodeEval] = None,
) -> np.ndarray:
    """Solve the variational state equation driven by ``du``; returns (n, N)."""
    if nodes is None:
        nodes = evaluate_nodes(problem, traj)
    forcing = np.einsum("inm,mi->in", nodes.f_u, du)
    dx = kernels.forced_rk4(nodes.f_x, forcing, traj.h)
    dx[0] = 0.0
    return dx.T.copy()


def state_rate_quadrature(
    traj: TrajectoryGrid, ts: TransitionSet, nodes: NodeEval, du: np.ndarray
) -> np.ndarray:
    """Integral form of the state rate, ``int_{t0}^{t} Phi(t, s) f_u du ds``.

    Cumulative trapezoid on ``Psi_inv f_u du``; used to cross-check
    :func:`state_rate`.
    """
    v = np.einsum("iab,ibm,mi->ia", ts.Psi_inv, nodes.f_u, du)
    seg = 0.5 * traj.h * (v[1:] + v[:-1])
    cum = np.vstack([np.zeros((1, v.shape[1])), np.cumsum(seg, axis=0)])
    return np.einsum("iab,ib->ai", ts.Psi, cum)


@dataclass(frozen=True)
class RateBundle:
    """All intermediate quantities produced while forming the rates of one snapshot."""

    traj: TrajectoryGrid
    nodes: NodeEval
    ts: TransitionSet
    gf: GradientField
    ms: MultiplierSystem
    rates: EvolutionRates


def compute_rates(
    problem: ProblemModel, traj: TrajectoryGrid, gains: GainConfig, substeps: int = 1
) -> RateBundle:
    """Transition set, gradient, multiplier and rates for one snapshot."""
    nodes = evaluate_nodes(problem, traj)
    ts = build_from_jacobians(nodes.f_x, traj.h, substeps)
    gf = compute_gradient_field(problem, traj, ts, nodes)
    ms = assemble_multiplier_system(problem, traj, ts, gf, gains, nodes)
    du, dtf = control_and_tf_rates(problem, traj, ts, gf, ms, gains, nodes)
    dx = state_rate(problem, traj, du, nodes)
    return RateBundle(traj, nodes, ts, gf, ms, EvolutionRates(du, dx, dtf, ms.pi.copy()))


def tangency_residual(bundle: RateBundle) -> np.ndarray:
    """Left side of the linearized terminal constraint for the bundle's rates.

    ``g_x int Phi(tf,t) f_u du dt + (g_x f + g_t) dtf``, trapezoidal in time.
    """
    if bundle.ms.pi.size == 0:
        return np.zeros(0)
    wq = trapezoid_weights(bundle.traj.N, bundle.traj.h)
    G = constraint_sensitivity(bundle.nodes, bundle.ts)
    lhs = np.einsum("i,iqm,mi->q", wq, G, bundle.rates.du)
    return lhs + bundle.nodes.constraint_rate_f * bundle.rates.dtf


def cost_rate(bundle: RateBundle) -> float:
    """Directional derivative of the cost along the rates (gradient form)."""
    wq = trapezoid_weights(bundle.traj.N, bundle.traj.h)
    integral = float(np.einsum("i,mi,mi->", wq, bundle.gf.p_u, bundle.rates.du))
    return bundle.nodes.hamiltonian_rate_f * bundle.rates.dtf + integral


def cost_rate_negative_form(bundle: RateBundle, gains: GainConfig, free_tf: bool) -> float:
    """The same derivative written as a negative sum of squares."""
    wq = trapezoid_weights(bundle.traj.N, bundle.traj.h)
    d = corrected_gradient(bundle.nodes, bundle.ts, bundle.gf, bundle.ms.pi)
    integral = float(np.einsum("i,mi,mk,ki->", wq, d, gains.K, d))
    term = 0.0
    if free_tf:
        term = gains.k_tf * terminal_residual(bundle.nodes, bundle.ms.pi) ** 2
    return -term - integral
