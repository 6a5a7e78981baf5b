import importlib.util
import os
import subprocess
import sys

import numpy as np
import pytest

from qhinf import kernels
from qhinf._accel import USE_NUMBA, backend
from qhinf.oracle import integrate_flow

HAVE_NUMBA = importlib.util.find_spec("numba") is not None

SNIPPET = """
import numpy as np
from qhinf import backend
from qhinf.oracle import care_by_flow
X = care_by_flow(np.array([[1.0]]), np.array([[-1.0]]), np.array([[1.0]]))
print(backend(), repr(float(X[0, 0].real)))
"""


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("true", "numpy"), ("0", "numba" if HAVE_NUMBA else "numpy")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, QHINF_DISABLE_NUMBA=flag)
    cp = subprocess.run([sys.executable, "-c", SNIPPET], env=env, capture_output=True, text=True, check=True)
    name, value = cp.stdout.split()
    assert name == expected
    assert float(value) == pytest.approx(1 + np.sqrt(2), abs=1e-10)


def test_flow_kernel_python_path_matches():
    py_flow = getattr(kernels.riccati_flow, "py_func", kernels.riccati_flow)
    rng = np.random.default_rng(0)
    k = 3
    A = rng.normal(size=(k, k)) - 2 * np.eye(k) + 0j
    Q = np.eye(k, dtype=complex)
    R = -np.eye(k, dtype=complex)
    Z1 = np.zeros((k, 1), complex)
    W = np.zeros((1, 1), complex)
    X0 = np.zeros((k, k), complex)
    X_py, t_py, _ = py_flow(Q, A, R, Z1, Z1, W, X0, 0.01, 50.0, 1e-10)
    X_jit = integrate_flow(Q, A, R, dt=0.01, t_max=50.0, stop_tol=1e-10)
    np.testing.assert_allclose(X_py, X_jit, atol=1e-12)


def test_backend_name():
    assert backend() == ("numba" if USE_NUMBA else "numpy")
