"""Pure-Python/NumPy kernels (reference implementation and fallback).

Both kernels march classical RK4 node to node over a uniform grid with the
generator ``A(t)`` (and forcing ``b(t)``) interpolated linearly between
nodes.  ``substeps`` RK4 steps are taken per node interval.
"""

import numpy as np


def fundamental_rk4(A, h, substeps=1):
    """Solve ``dY/dt = A(t) Y``, ``Y(t0) = I``; returns ``Y`` at every node, (N, n, n)."""
    A = np.ascontiguousarray(A, dtype=float)
    N, n, _ = A.shape
    out = np.empty_like(A)
    Y = np.eye(n)
    out[0] = Y
    dt = h / substeps
    for i in range(N - 1):
        A0, dA = A[i], A[i + 1] - A[i]
        for k in range(substeps):
            s0 = k / substeps
            Aa = A0 + s0 * dA
            Am = A0 + (s0 + 0.5 / substeps) * dA
            Ab = A0 + (s0 + 1.0 / substeps) * dA
            k1 = Aa @ Y
            k2 = Am @ (Y + 0.5 * dt * k1)
            k3 = Am @ (Y + 0.5 * dt * k2)
            k4 = Ab @ (Y + dt * k3)
            Y = Y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = Y
    return out


def forced_rk4(A, b, h, substeps=1):
    """Solve ``dy/dt = A(t) y + b(t)``, ``y(t0) = 0``; returns ``y`` at every node, (N, n)."""
    A = np.ascontiguousarray(A, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    N, n, _ = A.shape
    out = np.empty((N, n))
    y = np.zeros(n)
    out[0] = y
    dt = h / substeps
    for i in range(N - 1):
        A0, dA = A[i], A[i + 1] - A[i]
        b0, db = b[i], b[i + 1] - b[i]
        for k in range(substeps):
            s0 = k / substeps
            sm = s0 + 0.5 / substeps
            s1 = s0 + 1.0 / substeps
            k1 = (A0 + s0 * dA) @ y + (b0 + s0 * db)
            k2 = (A0 + sm * dA) @ (y + 0.5 * dt * k1) + (b0 + sm * db)
            k3 = (A0 + sm * dA) @ (y + 0.5 * dt * k2) + (b0 + sm * db)
            k4 = (A0 + s1 * dA) @ (y + dt * k3) + (b0 + s1 * db)
            y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = y
    return out
