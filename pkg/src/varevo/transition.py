"""State transition matrices of the dynamics linearized along a trajectory."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import TransitionConditioningError
from .model import NodeEval, ProblemModel, TrajectoryGrid, evaluate_nodes

#: Largest admissible condition number of a fundamental matrix.
COND_LIMIT = 1e12


@dataclass(frozen=True)
class TransitionSet:
    """Fundamental matrices ``Psi[i] = Phi(t_i, t0)`` and their inverses.

    Any ``Phi(t_i, t_j)`` is ``Psi[i] @ Psi_inv[j]``.
    """

    Psi: np.ndarray  # (N, n, n)
    Psi_inv: np.ndarray  # (N, n, n)
    cond_max: float

    @property
    def N(self) -> int:
        return self.Psi.shape[0]

    def to_final(self) -> np.ndarray:
        """``Phi(tf, t_i)`` for every node, (N, n, n); the last entry is exactly I."""
        out = self.Psi[-1] @ self.Psi_inv
        out[-1] = np.eye(self.Psi.shape[1])
        return out


def build_from_jacobians(f_x: np.ndarray, h: float, substeps: int = 1) -> TransitionSet:
    """Integrate ``dPsi/dt = f_x(t) Psi`` from the nodal Jacobians ``f_x`` (N, n, n)."""
    Psi = kernels.fundamental_rk4(f_x, h, substeps)
    Psi[0] = np.eye(Psi.shape[1])
    if not np.all(np.isfinite(Psi)):
        raise TransitionConditioningError("fundamental matrix overflowed")
    cond = np.linalg.cond(Psi)
    cond_max = float(np.max(cond))
    if not np.isfinite(cond_max) or cond_max > COND_LIMIT:
        i = int(np.argmax(np.where(np.isfinite(cond), cond, np.inf)))
        raise TransitionConditioningError(
            f"fundamental matrix at node {i} has condition estimate {cond[i]:.3e}"
        )
    Psi_inv = np.linalg.inv(Psi)
    Psi_inv[0] = np.eye(Psi.shape[1])
    resid = np.max(np.abs(Psi @ Psi_inv - np.eye(Psi.shape[1])))
    if resid > 1e-8:
        raise TransitionConditioningError(f"inverse check failed (residual {resid:.3e})")
    return TransitionSet(Psi, Psi_inv, cond_max)


def build_transition_set(
    problem: ProblemModel,
    traj: TrajectoryGrid,
    nodes: Optional[NodeEval] = None,
    substeps: int = 1,
) -> TransitionSet:
    """Fundamental matrices of the linearization along ``traj``."""
    if nodes is None:
        nodes = evaluate_nodes(problem, traj)
    return build_from_jacobians(nodes.f_x, traj.h, substeps)


def transition(ts: TransitionSet, i: int, j: int) -> np.ndarray:
    """``Phi(t_i, t_j)``."""
    N = ts.N
    if not (0 <= i < N and 0 <= j < N):
        raise IndexError(f"node indices ({i}, {j}) out of range for {N} nodes")
    if i == j:
        return np.eye(ts.Psi.shape[1])
    return ts.Psi[i] @ ts.Psi_inv[j]
