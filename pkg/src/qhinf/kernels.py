"""Inner loops: frequency sweeps and the differential Riccati integrator.

Every function here sticks to the numba-compatible subset of numpy so that it
can be compiled by :func:`qhinf._accel.jit`. ``response_batched`` is the
vectorized numpy counterpart of ``response_loop`` and is used when numba is
disabled.
"""

import numpy as np

from ._accel import jit


@jit
def _flow_rhs(X, Q, A, R, T, U, W):
    G = T + X @ U
    GH = np.ascontiguousarray(G.conj().T)
    AH = np.ascontiguousarray(A.conj().T)
    return Q + A @ X + X @ AH + X @ R @ X - G @ W @ GH


@jit
def riccati_flow(Q, A, R, T, U, W, X0, dt, t_max, stop_tol):
    """Integrate ``dX/dt = Q + AX + XA^H + XRX - (T + XU) W (T + XU)^H``.

    Classical fixed-step RK4, stopped once ``||dX/dt||_F < stop_tol`` or at
    ``t_max``. The quadratic term is left uncompleted on purpose so that this
    routine never shares algebra with the Hamiltonian solver it is used to
    check.

    Returns
    -------
    X : ndarray
        State at the final time.
    t : float
        Final time reached.
    rate : float
        Frobenius norm of the right-hand side at ``X``.
    """
    X = X0.copy()
    t = 0.0
    rate = np.inf
    while t < t_max:
        k1 = _flow_rhs(X, Q, A, R, T, U, W)
        rate = np.sqrt(np.sum(np.abs(k1) ** 2))
        if rate < stop_tol:
            break
        k2 = _flow_rhs(X + 0.5 * dt * k1, Q, A, R, T, U, W)
        k3 = _flow_rhs(X + 0.5 * dt * k2, Q, A, R, T, U, W)
        k4 = _flow_rhs(X + dt * k3, Q, A, R, T, U, W)
        X = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        X = 0.5 * (X + np.ascontiguousarray(X.conj().T))
        t += dt
    return X, t, rate


@jit
def response_loop(A, B, C, D, omegas, valid):
    k = A.shape[0]
    nw = omegas.shape[0]
    out = np.empty((nw, C.shape[0], B.shape[1]), dtype=np.complex128)
    eye = np.eye(k, dtype=np.complex128)
    for i in range(nw):
        if not valid[i]:
            out[i, :, :] = np.nan + 1j * np.nan
            continue
        if k == 0:
            out[i, :, :] = D
            continue
        M = 1j * omegas[i] * eye - A
        out[i, :, :] = C @ np.linalg.solve(M, B) + D
    return out


def response_batched(A, B, C, D, omegas, valid):
    k = A.shape[0]
    out = np.full((omegas.size, C.shape[0], B.shape[1]), np.nan + 1j * np.nan)
    w = omegas[valid]
    if k == 0:
        out[valid] = D
        return out
    M = 1j * w[:, None, None] * np.eye(k) - A[None, :, :]
    out[valid] = C @ np.linalg.solve(M, np.broadcast_to(B, (w.size,) + B.shape)) + D
    return out


@jit
def sigma_max_at(A, B, C, D, omega):
    k = A.shape[0]
    if k == 0:
        G = D.copy()
    else:
        M = 1j * omega * np.eye(k, dtype=np.complex128) - A
        G = C @ np.linalg.solve(M, B) + D
    if G.shape[0] == 0 or G.shape[1] == 0:
        return 0.0
    return np.linalg.svd(G)[1][0]
