"""Optional numba acceleration.

Kernels in :mod:`qhinf.kernels` are written in the numba-compatible subset of
numpy. They are compiled with ``numba.njit`` when numba is importable and the
environment variable ``QHINF_DISABLE_NUMBA`` is unset (or ``0``); otherwise the
plain Python/numpy path is used.
"""

import os

_flag = os.environ.get("QHINF_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba
except ImportError:
    numba = None

USE_NUMBA = numba is not None


def jit(fn):
    """Compile ``fn`` with ``numba.njit(cache=True)`` when acceleration is on."""
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend():
    return "numba" if USE_NUMBA else "numpy"
