"""Complex continuous-time algebraic Riccati and Lyapunov equations.

The Riccati solver works on the canonical form

    A^H X + X A + X R X + Q = 0,        R = R^H,  Q = Q^H,

and returns the stabilizing solution, i.e. the one for which ``A + R X`` is
Hurwitz. It is computed from the stable invariant subspace of the Hamiltonian
matrix ``[[A, R], [-Q, -A^H]]`` using an ordered complex Schur form.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InputError, NoStabilizingSolution, NumericalError, PreconditionError

AXIS_MARGIN = 1e-9
PSD_MARGIN = 1e-8
HERMITIAN_TOL = 1e-10


def hermitian_part(X):
    X = np.asarray(X)
    return 0.5 * (X + X.conj().T)


def asymmetry(X):
    """Relative Hermitian defect ``||X - X^H|| / ||X||`` (0 for the zero matrix)."""
    X = np.asarray(X)
    scale = np.linalg.norm(X)
    if scale == 0.0:
        return 0.0
    return np.linalg.norm(X - X.conj().T) / scale


def _require_hermitian(name, X):
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise InputError(f"{name} must be square, got shape {X.shape}")
    if asymmetry(X) > HERMITIAN_TOL:
        raise InputError(f"{name} is not Hermitian (relative asymmetry {asymmetry(X):.3e})")
    return hermitian_part(X)


def is_psd(X, margin=PSD_MARGIN):
    X = np.asarray(X)
    if X.size == 0:
        return True
    scale = max(np.linalg.norm(X, 2), 1.0)
    return bool(np.linalg.eigvalsh(hermitian_part(X)).min() >= -margin * scale)


def spectral_radius(M):
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def spectral_abscissa(M):
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return -np.inf
    return float(np.max(np.linalg.eigvals(M).real))


@dataclass(frozen=True, eq=False)
class CareProblem:
    """Data of ``A^H X + X A + X R X + Q = 0``."""

    A: np.ndarray
    R: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InputError(f"A must be square, got shape {A.shape}")
        R = _require_hermitian("R", self.R)
        Q = _require_hermitian("Q", self.Q)
        if R.shape != A.shape or Q.shape != A.shape:
            raise InputError(f"shape mismatch: A {A.shape}, R {R.shape}, Q {Q.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "Q", Q)

    def residual(self, X):
        A, R, Q = self.A, self.R, self.Q
        return A.conj().T @ X + X @ A + X @ R @ X + Q

    def residual_scale(self, X):
        nx = np.linalg.norm(X)
        return (
            2.0 * np.linalg.norm(self.A) * nx
            + np.linalg.norm(self.R) * nx**2
            + np.linalg.norm(self.Q)
        )

    def hamiltonian(self):
        A, R, Q = self.A, self.R, self.Q
        return np.block([[A, R], [-Q, -A.conj().T]])


@dataclass(frozen=True, eq=False)
class CareSolution:
    """Stabilizing Hermitian solution plus diagnostics."""

    X: np.ndarray
    residual_norm: float
    relative_residual: float
    closed_loop_eigs: np.ndarray
    is_stabilizing: bool
    is_psd: bool
    refined: bool = False

    def summary(self):
        return {
            "residual_norm": float(self.residual_norm),
            "relative_residual": float(self.relative_residual),
            "closed_loop_eigs": self.closed_loop_eigs,
            "is_stabilizing": bool(self.is_stabilizing),
            "is_psd": bool(self.is_psd),
            "min_eig": float(np.linalg.eigvalsh(self.X).min()) if self.X.size else 0.0,
        }


def _relative(problem, X):
    res = problem.residual(X)
    scale = problem.residual_scale(X)
    norm = float(np.linalg.norm(res))
    return norm, (norm / scale if scale > 0 else norm)


def solve_care(problem, tol=1e-9):
    """Stabilizing solution of ``A^H X + X A + X R X + Q = 0``.

    Parameters
    ----------
    problem : CareProblem
    tol : float
        Acceptable relative residual. One Newton correction is attempted
        before giving up.

    Raises
    ------
    NoStabilizingSolution
        If the Hamiltonian has an eigenvalue with ``|Re| < 1e-9 ||H||``.
    NumericalError
        If the stable subspace basis is singular or the residual stays above
        ``tol`` after refinement.
    """
    if not isinstance(problem, CareProblem):
        problem = CareProblem(*problem)
    k = problem.A.shape[0]
    if k == 0:
        empty = np.zeros((0, 0), dtype=complex)
        return CareSolution(empty, 0.0, 0.0, np.zeros(0, dtype=complex), True, True)

    H = problem.hamiltonian()
    h_scale = max(np.linalg.norm(H, 2), np.finfo(float).tiny)
    eigs = np.linalg.eigvals(H)
    closest = np.min(np.abs(eigs.real))
    if closest < AXIS_MARGIN * h_scale:
        raise NoStabilizingSolution(
            f"Hamiltonian eigenvalue within {closest:.3e} of the imaginary axis "
            f"(threshold {AXIS_MARGIN * h_scale:.3e})"
        )

    _, Z, sdim = scipy.linalg.schur(H, output="complex", sort="lhp")
    if sdim != k:
        raise NoStabilizingSolution(f"stable subspace has dimension {sdim}, expected {k}")
    U1 = Z[:k, :k]
    U2 = Z[k:, :k]
    if np.linalg.cond(U1) > 1e12:
        raise NumericalError("stable-subspace basis U1 is numerically singular")
    X = hermitian_part(np.linalg.solve(U1.T, U2.T).T)

    norm, rel = _relative(problem, X)
    refined = False
    if rel > tol:
        Acl = problem.A + problem.R @ X
        delta = solve_lyapunov(Acl.conj().T, problem.residual(X))
        X = hermitian_part(X + delta)
        norm, rel = _relative(problem, X)
        refined = True
        if rel > tol:
            raise NumericalError(f"CARE residual {rel:.3e} above tolerance {tol:.1e}")

    cl = np.linalg.eigvals(problem.A + problem.R @ X)
    return CareSolution(
        X=X,
        residual_norm=norm,
        relative_residual=rel,
        closed_loop_eigs=cl,
        is_stabilizing=bool(np.max(cl.real) < 0.0),
        is_psd=is_psd(X),
        refined=refined,
    )


def solve_lyapunov(A, Q, tol=1e-9, symmetrize=True):
    """Hermitian solution of ``A X + X A^H + Q = 0``.

    Bartels-Stewart via ``scipy.linalg.solve_continuous_lyapunov``. Raises
    :class:`PreconditionError` when some ``lambda_i + conj(lambda_j)`` is
    (numerically) zero, since the equation is then singular. With
    ``symmetrize=False`` the raw solver output is returned so callers can
    measure its Hermitian defect.
    """
    A = np.asarray(A, dtype=complex)
    Q = _require_hermitian("Q", Q)
    if A.shape != Q.shape:
        raise InputError(f"shape mismatch: A {A.shape}, Q {Q.shape}")
    if A.size == 0:
        return np.zeros_like(A)
    lam = np.linalg.eigvals(A)
    sep = np.min(np.abs(lam[:, None] + lam.conj()[None, :]))
    if sep < 1e-10 * max(np.linalg.norm(A, 2), 1.0):
        raise PreconditionError(
            f"Lyapunov operator is singular: min |lambda_i + conj(lambda_j)| = {sep:.3e}"
        )
    X = scipy.linalg.solve_continuous_lyapunov(A, -Q)
    if symmetrize:
        X = hermitian_part(X)
    res = np.linalg.norm(A @ X + X @ A.conj().T + Q)
    scale = np.linalg.norm(Q)
    if scale > 0 and res > tol * max(scale, 2 * np.linalg.norm(A) * np.linalg.norm(X)):
        raise NumericalError(f"Lyapunov residual {res:.3e} too large")
    return X
