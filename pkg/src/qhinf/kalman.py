"""Optimal complex Kalman filter under homodyne detection."""

from dataclasses import dataclass

import numpy as np

from .care import CareProblem, is_psd, solve_care, spectral_abscissa
from .errors import NumericalError, PreconditionError


@dataclass(frozen=True, eq=False)
class KalmanFilter:
    """``dx_e = A_e x_e dt + K_e dy``, ``z_hat = L_e x_e``; ``P`` is the error covariance."""

    A_e: np.ndarray
    K_e: np.ndarray
    L_e: np.ndarray
    P: np.ndarray
    residual: float = 0.0

    def as_estimator(self):
        from .hinf import Estimator

        return Estimator(A_K=self.A_e, B_K=self.K_e, C_K=self.L_e)


def kalman_residual(plant, S, P):
    """Left-hand side of ``AP + PA^H + BB^H - (B + PC^H) S^H S (B + PC^H)^H``."""
    A, B, C = plant.A, plant.B, plant.C
    G = B + P @ C.conj().T
    return A @ P + P @ A.conj().T + B @ B.conj().T - G @ S.conj().T @ S @ G.conj().T


def _relative(plant, S, P):
    A, B, C = plant.A, plant.B, plant.C
    W = S.conj().T @ S
    G = B + P @ C.conj().T
    scale = (
        2 * np.linalg.norm(A) * np.linalg.norm(P)
        + np.linalg.norm(B) ** 2
        + np.linalg.norm(G) ** 2 * np.linalg.norm(W)
    )
    res = np.linalg.norm(kalman_residual(plant, S, P))
    return res / scale if scale > 0 else res


def solve_kalman_riccati(plant, S, tol=1e-8):
    """Stabilizing error covariance ``P`` of the filter Riccati equation.

    The quadratic is expanded to
    ``(A - BWC) P + P (A - BWC)^H - P C^H W C P + B (I - W) B^H = 0`` with
    ``W = S^H S`` and handed to :func:`solve_care` in its adjoint form. The
    returned residual is always measured on the unexpanded equation.
    """
    S = np.asarray(S, dtype=complex)
    m2 = 2 * plant.m
    if np.abs(plant.D - np.eye(m2)).max() > 1e-10:
        raise PreconditionError("the Kalman filter assumes a canonical field, D = I")
    W = S.conj().T @ S
    A, B, C = plant.A, plant.B, plant.C
    drift = A - B @ W @ C
    problem = CareProblem(
        A=drift.conj().T,
        R=-(C.conj().T @ W @ C),
        Q=B @ (np.eye(m2) - W) @ B.conj().T,
    )
    sol = solve_care(problem)
    P = sol.X
    rel = _relative(plant, S, P)
    if rel > tol:
        raise NumericalError(f"Kalman Riccati residual {rel:.3e} above {tol:.1e}")
    if not is_psd(P):
        raise NumericalError("Kalman Riccati solution is not positive semidefinite")
    return P


def kalman_filter(plant, S, P=None):
    S = np.asarray(S, dtype=complex)
    if P is None:
        P = solve_kalman_riccati(plant, S)
    K_e = (plant.B + P @ plant.C.conj().T) @ S.conj().T
    A_e = plant.A - K_e @ S @ plant.C
    if spectral_abscissa(A_e) >= 0.0:
        raise NumericalError("A_e is not Hurwitz; P is not the stabilizing solution")
    return KalmanFilter(
        A_e=A_e, K_e=K_e, L_e=plant.L.copy(), P=P, residual=_relative(plant, S, P)
    )
