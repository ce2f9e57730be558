import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varevo import _kernels_py, kernels


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


def test_fundamental_matches_exponential_for_constant_jacobian():
    a = 1.0
    A = np.full((101, 1, 1), a)
    Psi = _kernels_py.fundamental_rk4(A, 0.01)
    assert Psi[-1, 0, 0] == pytest.approx(np.e, abs=1e-8)


def test_forced_solution_for_double_integrator():
    # dx/dt = [[0,1],[0,0]] x + [0, 1] from zero gives [t^2/2, t]; RK4 is exact here
    N, h = 41, 0.05
    A = np.tile(np.array([[0.0, 1.0], [0.0, 0.0]]), (N, 1, 1))
    b = np.tile([0.0, 1.0], (N, 1))
    t = np.arange(N) * h
    y = _kernels_py.forced_rk4(A, b, h)
    np.testing.assert_allclose(y, np.column_stack([t**2 / 2, t]), atol=1e-13)


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(1, 4),
    N=st.integers(3, 30),
    substeps=st.integers(1, 3),
    seed=st.integers(0, 2**31 - 1),
)
def test_compiled_kernels_match_fallback(n, N, substeps, seed):
    from varevo import _kernels

    rng = np.random.default_rng(seed)
    A = rng.normal(size=(N, n, n))
    b = rng.normal(size=(N, n))
    h = 0.03
    np.testing.assert_allclose(
        _kernels.fundamental_rk4(A, h, substeps), _kernels_py.fundamental_rk4(A, h, substeps), rtol=1e-12, atol=1e-13
    )
    np.testing.assert_allclose(
        _kernels.forced_rk4(A, b, h, substeps), _kernels_py.forced_rk4(A, b, h, substeps), rtol=1e-12, atol=1e-13
    )


def test_fallback_selected_by_environment():
    import os
    import subprocess
    import sys

    code = "from varevo import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, VAREVO_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
