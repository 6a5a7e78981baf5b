"""Steady states of differential Riccati equations by forward integration.

These are slow, independent cross-checks for the Schur-based solvers. Each
wrapper feeds the *literal* equation (uncompleted square) to the RK4 kernel,
starting from the zero matrix.
"""

import numpy as np

from .errors import NumericalError
from .kernels import riccati_flow


def _step_size(*mats):
    scale = sum(np.linalg.norm(np.asarray(M), 2) for M in mats if np.asarray(M).size)
    return min(0.01, 0.2 / max(scale, 1e-12))


def integrate_flow(Q, A, R, T=None, U=None, W=None, dt=None, t_max=2000.0, stop_tol=1e-12):
    """Steady state of ``dX/dt = Q + AX + XA^H + XRX - (T + XU) W (T + XU)^H``.

    ``T``, ``U`` and ``W`` default to zero. ``dt`` defaults to a step scaled
    to the data. Raises :class:`NumericalError` if the flow has not settled by
    ``t_max`` or diverged.
    """
    A = np.ascontiguousarray(A, dtype=np.complex128)
    k = A.shape[0]
    Q = np.ascontiguousarray(Q, dtype=np.complex128)
    R = np.ascontiguousarray(R, dtype=np.complex128)
    if W is None:
        T = np.zeros((k, 1), dtype=np.complex128)
        U = np.zeros((k, 1), dtype=np.complex128)
        W = np.zeros((1, 1), dtype=np.complex128)
    T = np.ascontiguousarray(T, dtype=np.complex128)
    U = np.ascontiguousarray(U, dtype=np.complex128)
    W = np.ascontiguousarray(W, dtype=np.complex128)
    if dt is None:
        dt = _step_size(A, R, Q, U @ W @ U.conj().T)
    X0 = np.zeros((k, k), dtype=np.complex128)
    X, t, rate = riccati_flow(Q, A, R, T, U, W, X0, float(dt), float(t_max), float(stop_tol))
    if not np.all(np.isfinite(X)):
        raise NumericalError("Riccati flow diverged")
    if rate >= stop_tol:
        raise NumericalError(f"Riccati flow not settled at t={t:.1f} (rate {rate:.3e})")
    return X


def care_by_flow(A, R, Q, **kw):
    """Forward-integration counterpart of :func:`qhinf.care.solve_care`."""
    A = np.asarray(A, dtype=complex)
    return integrate_flow(Q, A.conj().T, R, **kw)


def kalman_by_flow(A, B, C, S, **kw):
    """Steady state of ``dP/dt = AP + PA^H + BB^H - (B + PC^H) S^H S (B + PC^H)^H``."""
    B = np.asarray(B, dtype=complex)
    C = np.asarray(C, dtype=complex)
    S = np.asarray(S, dtype=complex)
    k = np.asarray(A).shape[0]
    return integrate_flow(
        B @ B.conj().T, A, np.zeros((k, k)), T=B, U=C.conj().T, W=S.conj().T @ S, **kw
    )
