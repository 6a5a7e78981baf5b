"""Transfer functions, frequency responses and H-infinity norms."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._accel import USE_NUMBA
from .care import spectral_abscissa
from .errors import InputError, NumericalError

DEFAULT_OMEGAS = np.logspace(-2, 2, 400)
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class StateSpaceSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A, B, C, D = (np.atleast_2d(np.asarray(getattr(self, k), dtype=np.complex128)) for k in "ABCD")
        k = A.shape[0]
        if A.shape != (k, k) or B.shape[0] != k or C.shape[1] != k or D.shape != (C.shape[0], B.shape[1]):
            raise InputError(f"inconsistent realization: A {A.shape}, B {B.shape}, C {C.shape}, D {D.shape}")
        for name, M in zip("ABCD", (A, B, C, D)):
            object.__setattr__(self, name, np.ascontiguousarray(M))

    @property
    def is_stable(self):
        return spectral_abscissa(self.A) < 0


@dataclass(frozen=True, eq=False)
class RationalTF:
    """``num[i, j](s) / den(s)``; coefficients in descending powers of ``s``, ``den`` monic."""

    num: np.ndarray
    den: np.ndarray

    def __call__(self, s):
        deg = self.num.shape[-1] - 1
        powers = complex(s) ** np.arange(deg, -1, -1)
        return (self.num @ powers) / np.polyval(self.den, s)

    def scalar(self, i=0, j=0):
        return RationalTF(num=self.num[i, j], den=self.den)


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    omegas: np.ndarray
    values: np.ndarray

    @property
    def magnitudes_db(self):
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(self.values))

    def peak(self):
        """``(omega, |value|)`` at the largest magnitude, ignoring undefined points."""
        mag = np.abs(self.values)
        mag = np.where(np.isfinite(mag), mag, -np.inf)
        flat = mag.reshape(mag.shape[0], -1).max(axis=1)
        i = int(np.argmax(flat))
        return float(self.omegas[i]), float(flat[i])


def _char_poly(A):
    return np.poly(np.linalg.eigvals(A)) if A.size else np.ones(1, dtype=complex)


def _adjugate_coeffs(A):
    """Faddeev-LeVerrier: ``adj(sI - A) = sum_k N[k] s^(n-1-k)``."""
    n = A.shape[0]
    N = np.zeros((n, n, n), dtype=complex)
    Mk = np.eye(n, dtype=complex)
    for k in range(n):
        N[k] = Mk
        AM = A @ Mk
        c = -np.trace(AM) / (k + 1)
        Mk = AM + c * np.eye(n)
    return N


def estimator_tf(est, n_check=20, rtol=1e-8, seed=0):
    """Matrix of rational functions ``C_K (sI - A_K)^-1 B_K``.

    The denominator is re-expanded from the eigenvalues of ``A_K``; the
    numerator comes from the Faddeev-LeVerrier adjugate. The result is checked
    against the resolvent at ``n_check`` random frequencies.
    """
    A, B, C = (np.asarray(x, dtype=complex) for x in (est.A_K, est.B_K, est.C_K))
    n = A.shape[0]
    if B.shape[0] != n or C.shape[1] != n:
        raise InputError("estimator dimensions are inconsistent")
    den = _char_poly(A)
    N = _adjugate_coeffs(A)
    num = np.einsum("ra,kab,bq->rqk", C, N, B)
    tf = RationalTF(num=num, den=den)

    rng = np.random.default_rng(seed)
    for w in rng.uniform(0.01, 100.0, n_check):
        s = 1j * w
        direct = C @ np.linalg.solve(s * np.eye(n) - A, B)
        via_tf = tf(s)
        err = np.abs(direct - via_tf).max()
        if err > rtol * max(1.0, np.abs(direct).max()):
            raise NumericalError(f"transfer-function coefficients disagree with resolvent ({err:.3e})")
    return tf


def error_system(plant, dA, dB, dC, S, est):
    """Disturbance-to-error system on the augmented state ``[x; x_hat]``."""
    if hasattr(est, "as_estimator"):
        est = est.as_estimator()
    S = np.atleast_2d(np.asarray(S, dtype=complex))
    n2 = plant.A.shape[0]
    k = est.A_K.shape[0]
    A_aug = np.block([
        [plant.A + dA, np.zeros((n2, k))],
        [est.B_K @ S @ (plant.C + dC), est.A_K],
    ])
    B_aug = np.vstack([plant.B + dB, est.B_K @ S @ plant.D])
    C_aug = np.hstack([-plant.L, est.C_K])
    D_aug = np.zeros((C_aug.shape[0], B_aug.shape[1]))
    return StateSpaceSystem(A_aug, B_aug, C_aug, D_aug)


def select_channel(sys, input_index):
    q = sys.B.shape[1]
    if not 0 <= input_index < q:
        raise InputError(f"input index {input_index} out of range for {q} inputs")
    j = slice(input_index, input_index + 1)
    return StateSpaceSystem(sys.A, sys.B[:, j], sys.C, sys.D[:, j])


def _valid_points(A, omegas):
    if A.size == 0:
        return np.ones(omegas.shape, dtype=bool)
    lam = np.linalg.eigvals(A)
    scale = max(np.linalg.norm(A, 2), 1.0)
    gap = np.min(np.abs(1j * omegas[:, None] - lam[None, :]), axis=1)
    return gap > 1e-12 * scale


def freq_response(sys, omegas=None):
    """``C (i w I - A)^-1 B + D`` per frequency; points on a pole are NaN."""
    w = DEFAULT_OMEGAS if omegas is None else np.asarray(omegas, dtype=float).ravel()
    w = np.ascontiguousarray(w)
    valid = _valid_points(sys.A, w)
    if USE_NUMBA:
        vals = kernels.response_loop(sys.A, sys.B, sys.C, sys.D, w, valid)
    else:
        vals = kernels.response_batched(sys.A, sys.B, sys.C, sys.D, w, valid)
    if vals.shape[1:] == (1, 1):
        vals = vals[:, 0, 0]
    return FrequencyResponse(omegas=w, values=vals)


def _sigma(sys, w):
    return kernels.sigma_max_at(sys.A, sys.B, sys.C, sys.D, float(w))


def linf_norm(sys, tol=1e-8, omegas=None):
    """Peak gain over the imaginary axis, ignoring stability.

    A log grid locates the peak; golden-section search refines it between
    the neighbouring grid points. Returns ``(value, omega_peak)``.
    """
    grid = np.concatenate([[0.0], np.logspace(-4, 4, 801) if omegas is None else omegas])
    valid = _valid_points(sys.A, grid)
    if not valid.all():
        return np.inf, float(grid[~valid][0])
    vals = np.array([_sigma(sys, w) for w in grid])
    i = int(np.argmax(vals))
    best, best_w = vals[i], grid[i]
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = _sigma(sys, c), _sigma(sys, d)
    while b - a > tol * max(1.0, abs(b)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = _sigma(sys, c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = _sigma(sys, d)
    for w, f in ((c, fc), (d, fd)):
        if f > best:
            best, best_w = f, w
    # gain at infinity is ||D||
    if sys.D.size:
        dinf = np.linalg.norm(sys.D, 2)
        if dinf > best:
            best, best_w = dinf, np.inf
    return float(best), float(best_w)


def hinf_norm(sys, tol=1e-8):
    """H-infinity norm; ``inf`` when ``A`` is not Hurwitz."""
    if not sys.is_stable:
        return np.inf
    return linf_norm(sys, tol=tol)[0]
