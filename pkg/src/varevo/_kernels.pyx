# cython: language_level=3
"""Compiled RK4 sweeps; same contract as ``varevo._kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline void _axpy_gen(const double *A0, const double *dA, double s,
                           const double *Y, double *out, Py_ssize_t n,
                           Py_ssize_t cols) noexcept nogil:
    # out = (A0 + s*dA) @ Y with Y of shape (n, cols)
    cdef Py_ssize_t r, c, k
    cdef double acc, a
    for r in range(n):
        for c in range(cols):
            acc = 0.0
            for k in range(n):
                a = A0[r * n + k] + s * dA[r * n + k]
                acc += a * Y[k * cols + c]
            out[r * cols + c] = acc


cdef void _sweep(const double *A, const double *b, double *out, Py_ssize_t N,
                 Py_ssize_t n, Py_ssize_t cols, double h, int substeps,
                 bint forced) noexcept nogil:
    cdef Py_ssize_t size = n * cols
    cdef Py_ssize_t nn = n * n
    cdef double *Y = <double *> malloc(size * sizeof(double))
    cdef double *T = <double *> malloc(size * sizeof(double))
    cdef double *k1 = <double *> malloc(size * sizeof(double))
    cdef double *k2 = <double *> malloc(size * sizeof(double))
    cdef double *k3 = <double *> malloc(size * sizeof(double))
    cdef double *k4 = <double *> malloc(size * sizeof(double))
    cdef double *dA = <double *> malloc(nn * sizeof(double))
    cdef double *A0
    cdef double *b0
    cdef double db_j
    cdef Py_ssize_t i, j, k
    cdef double dt = h / substeps
    cdef double s0, sm, s1
    for j in range(size):
        out[j] = Y[j] = 0.0
    if not forced:
        for j in range(n):
            Y[j * cols + j] = 1.0
            out[j * cols + j] = 1.0
    for i in range(N - 1):
        A0 = <double *> &A[i * nn]
        for j in range(nn):
            dA[j] = A[(i + 1) * nn + j] - A0[j]
        for k in range(substeps):
            s0 = <double> k / substeps
            sm = s0 + 0.5 / substeps
            s1 = s0 + 1.0 / substeps
            _axpy_gen(A0, dA, s0, Y, k1, n, cols)
            if forced:
                for j in range(n):
                    k1[j] += b[i * n + j] + s0 * (b[(i + 1) * n + j] - b[i * n + j])
            for j in range(size):
                T[j] = Y[j] + 0.5 * dt * k1[j]
            _axpy_gen(A0, dA, sm, T, k2, n, cols)
            if forced:
                for j in range(n):
                    k2[j] += b[i * n + j] + sm * (b[(i + 1) * n + j] - b[i * n + j])
            for j in range(size):
                T[j] = Y[j] + 0.5 * dt * k2[j]
            _axpy_gen(A0, dA, sm, T, k3, n, cols)
            if forced:
                for j in range(n):
                    k3[j] += b[i * n + j] + sm * (b[(i + 1) * n + j] - b[i * n + j])
            for j in range(size):
                T[j] = Y[j] + dt * k3[j]
            _axpy_gen(A0, dA, s1, T, k4, n, cols)
            if forced:
                for j in range(n):
                    k4[j] += b[i * n + j] + s1 * (b[(i + 1) * n + j] - b[i * n + j])
            for j in range(size):
                Y[j] = Y[j] + (dt / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        for j in range(size):
            out[(i + 1) * size + j] = Y[j]
    free(Y); free(T); free(k1); free(k2); free(k3); free(k4); free(dA)


def fundamental_rk4(A, double h, int substeps=1):
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] Ac = np.ascontiguousarray(A, dtype=np.float64)
    cdef Py_ssize_t N = Ac.shape[0], n = Ac.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] out = np.empty((N, n, n))
    with nogil:
        _sweep(&Ac[0, 0, 0], NULL, &out[0, 0, 0], N, n, n, h, substeps, False)
    return out


def forced_rk4(A, b, double h, int substeps=1):
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] Ac = np.ascontiguousarray(A, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] bc = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t N = Ac.shape[0], n = Ac.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] out = np.empty((N, n))
    with nogil:
        _sweep(&Ac[0, 0, 0], &bc[0, 0], &out[0, 0], N, n, 1, h, substeps, True)
    return out
