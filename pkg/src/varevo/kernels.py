"""Kernel dispatch: the compiled extension when built, else the NumPy fallback.

Set ``VAREVO_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("VAREVO_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

fundamental_rk4 = _impl.fundamental_rk4
forced_rk4 = _impl.forced_rk4

__all__ = ["BACKEND", "fundamental_rk4", "forced_rk4"]
