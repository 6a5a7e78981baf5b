"""Linear quantum plants in doubled-up form.

A plant with ``n`` modes and ``m`` fields acts on the stacked state
``[a; a#]`` and has matrices of the form ``Delta(X1, X2) = [[X1, X2],
[conj(X2), conj(X1)]]``. This module builds such plants, the homodyne
measurement matrix, the structured uncertainty of the robust problem, and the
physical-realizability checks.
"""

from dataclasses import dataclass, field

import numpy as np

from .care import hermitian_part, solve_lyapunov
from .errors import InputError, NumericalError, PreconditionError

DOUBLED_TOL = 1e-10
INERTIA_TOL = 1e-9


def J(n):
    """``diag(I_n, -I_n)``."""
    return np.diag(np.concatenate([np.ones(n), -np.ones(n)])).astype(complex)


def build_doubled(X1, X2):
    X1 = np.atleast_2d(np.asarray(X1, dtype=complex))
    X2 = np.atleast_2d(np.asarray(X2, dtype=complex))
    if X1.shape != X2.shape:
        raise InputError(f"blocks differ in shape: {X1.shape} vs {X2.shape}")
    return np.block([[X1, X2], [X2.conj(), X1.conj()]])


def doubled_deviation(X):
    """Largest entrywise violation of the doubled-up block relations."""
    X = np.asarray(X, dtype=complex)
    r, c = X.shape
    if r % 2 or c % 2:
        raise InputError(f"doubled matrices have even dimensions, got {X.shape}")
    h, w = r // 2, c // 2
    if X.size == 0:
        return 0.0
    d1 = np.abs(X[h:, w:] - X[:h, :w].conj())
    d2 = np.abs(X[h:, :w] - X[:h, w:].conj())
    return float(max(d1.max(initial=0.0), d2.max(initial=0.0)))


def check_doubled(X, tol=DOUBLED_TOL):
    """Return ``(ok, deviation)`` for the doubled-up structure of ``X``."""
    dev = doubled_deviation(X)
    scale = max(np.abs(np.asarray(X)).max(initial=0.0), 1.0)
    return dev <= tol * scale, dev


@dataclass(frozen=True, eq=False)
class QuantumPlant:
    """Doubled-up state-space data ``(A, B, C, D)`` with estimated output ``z = L x``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        mats = {}
        for name in "ABCDL":
            M = np.atleast_2d(np.asarray(getattr(self, name), dtype=complex))
            mats[name] = M
            object.__setattr__(self, name, M)
        A, B, C, D, L = (mats[k] for k in "ABCDL")
        if A.shape[0] != A.shape[1] or A.shape[0] % 2:
            raise InputError(f"A must be square with even size, got {A.shape}")
        n2 = A.shape[0]
        m2 = B.shape[1]
        if m2 % 2:
            raise InputError(f"B must have an even number of columns, got {B.shape}")
        expected = {"B": (n2, m2), "C": (m2, n2), "D": (m2, m2)}
        for name, shape in expected.items():
            if mats[name].shape != shape:
                raise InputError(f"{name} has shape {mats[name].shape}, expected {shape}")
        if L.shape[1] != n2:
            raise InputError(f"L has {L.shape[1]} columns, expected {n2}")
        for name in "ABCD":
            ok, dev = check_doubled(mats[name])
            if not ok:
                raise InputError(f"{name} is not doubled-up (deviation {dev:.3e})")

    @property
    def n(self):
        return self.A.shape[0] // 2

    @property
    def m(self):
        return self.B.shape[1] // 2

    @property
    def p(self):
        return self.L.shape[0]

    def perturbed(self, dA, dB, dC):
        return QuantumPlant(self.A + dA, self.B + dB, self.C + dC, self.D, self.L)


def make_squeezer(beta, kappa, chi, L):
    """Linearized dynamic squeezer: one cavity mode, one field.

    ``beta`` is the total cavity loss, ``kappa`` the mirror coupling and
    ``chi`` the (complex) nonlinearity.
    """
    if beta <= 0 or kappa <= 0:
        raise InputError(f"beta and kappa must be positive, got beta={beta}, kappa={kappa}")
    A = build_doubled([[-beta / 2]], [[-chi]])
    r = np.sqrt(kappa)
    I2 = np.eye(2, dtype=complex)
    return QuantumPlant(A=A, B=-r * I2, C=r * I2, D=I2, L=L)


@dataclass(frozen=True)
class HomodyneConfig:
    """Homodyne detection angles, one per field, in radians."""

    thetas: tuple

    @classmethod
    def from_degrees(cls, degrees):
        return cls(tuple(np.deg2rad(np.asarray(degrees, dtype=float)).tolist()))


def build_homodyne_matrix(config):
    """``S = [S1 S2]`` with ``S1 = diag(e^{-i theta}/sqrt 2)``, ``S2 = conj(S1)``."""
    thetas = config.thetas if isinstance(config, HomodyneConfig) else config
    th = np.asarray(thetas, dtype=float).ravel()
    d = np.exp(-1j * th) / np.sqrt(2.0)
    return np.hstack([np.diag(d), np.diag(d.conj())])


@dataclass(frozen=True, eq=False)
class RealizabilityReport:
    """Outcome of the physical-realizability test.

    ``theta`` is the Hermitian-symmetrized Lyapunov solution (the commutation
    matrix when ``ok``). ``failed`` names the first violated condition:
    ``"hermitian"``, ``"b_relation"`` (``B = -Theta C^H J``) or ``"inertia"``.
    """

    ok: bool
    theta: np.ndarray
    residuals: dict
    inertia: tuple
    tol: float
    failed: str = None
    message: str = ""


def default_tolerance(plant):
    return 1e-8 * (np.linalg.norm(plant.A, 2) + np.linalg.norm(plant.B, 2) ** 2)


def inertia(H, rel=INERTIA_TOL):
    w = np.linalg.eigvalsh(hermitian_part(H))
    thr = rel * max(np.linalg.norm(H, 2), np.finfo(float).tiny)
    return int(np.sum(w > thr)), int(np.sum(w < -thr)), int(np.sum(np.abs(w) <= thr))


def check_physical_realizability(plant, tol=None):
    """Solve ``A Theta + Theta A^H + B J B^H = 0`` and test the realizability conditions.

    Raises
    ------
    PreconditionError
        ``D`` differs from the identity, or the Lyapunov operator is singular.
    """
    if tol is None:
        tol = default_tolerance(plant)
    n, m = plant.n, plant.m
    d_dev = float(np.abs(plant.D - np.eye(2 * m)).max())
    if d_dev > tol:
        raise PreconditionError(f"realizability requires D = I (max deviation {d_dev:.3e})")
    Jm = J(m)
    Jn = J(n)
    BJB = hermitian_part(plant.B @ Jm @ plant.B.conj().T)
    raw = solve_lyapunov(plant.A, BJB, symmetrize=False)
    herm = float(np.linalg.norm(raw - raw.conj().T))
    theta = hermitian_part(raw)
    lyap = np.linalg.norm(plant.A @ theta + theta @ plant.A.conj().T + BJB)
    brel = float(np.abs(plant.B + theta @ plant.C.conj().T @ Jm).max())
    inert = inertia(theta)
    residuals = {
        "lyapunov": float(lyap),
        "hermitian": herm,
        "b_relation": brel,
        "theta_minus_J": float(np.abs(theta - Jn).max()),
    }
    failed, msg = None, ""
    if lyap > tol:
        failed, msg = "lyapunov", f"Lyapunov residual {lyap:.3e} > {tol:.3e}"
    elif herm > tol:
        failed, msg = "hermitian", f"Theta is not Hermitian ({herm:.3e})"
    elif brel > tol:
        failed, msg = "b_relation", f"B = -Theta C^H J violated by {brel:.3e} > {tol:.3e}"
    elif inert != (n, n, 0):
        failed, msg = "inertia", f"Theta has inertia {inert}, expected {(n, n, 0)}"
    return RealizabilityReport(
        ok=failed is None, theta=theta, residuals=residuals, inertia=inert, tol=tol,
        failed=failed, message=msg,
    )


@dataclass(frozen=True, eq=False)
class HamiltonianCoupling:
    M: np.ndarray
    N: np.ndarray
    reconstruction_residual: float = 0.0


def extract_hamiltonian(plant, theta, tol=1e-10):
    """Recover ``M = M^H`` and ``N`` from ``A = -i Theta M - 1/2 Theta N^H J N``, ``C = N``."""
    theta = np.asarray(theta, dtype=complex)
    if np.linalg.cond(theta) > 1e12:
        raise NumericalError("Theta is singular")
    N = plant.C.copy()
    Jm = J(plant.m)
    drift = plant.A + 0.5 * theta @ N.conj().T @ Jm @ N
    M_raw = 1j * np.linalg.solve(theta, drift)
    scale = max(np.linalg.norm(M_raw), 1.0)
    if np.linalg.norm(M_raw - M_raw.conj().T) > tol * scale * 1e2:
        raise NumericalError("recovered Hamiltonian is not Hermitian; inputs are inconsistent")
    M = hermitian_part(M_raw)
    A_rec = -1j * theta @ M - 0.5 * theta @ N.conj().T @ Jm @ N
    return HamiltonianCoupling(M=M, N=N, reconstruction_residual=float(np.linalg.norm(plant.A - A_rec)))


def plant_from_hamiltonian(M, N, theta=None, L=None):
    """Build ``(A, B, C, D = I)`` from Hamiltonian and coupling matrices."""
    M = np.asarray(M, dtype=complex)
    N = np.asarray(N, dtype=complex)
    n = M.shape[0] // 2
    m = N.shape[0] // 2
    theta = J(n) if theta is None else np.asarray(theta, dtype=complex)
    Jm = J(m)
    A = -1j * theta @ M - 0.5 * theta @ N.conj().T @ Jm @ N
    B = -theta @ N.conj().T @ Jm
    if L is None:
        L = np.zeros((1, 2 * n))
    return QuantumPlant(A=A, B=B, C=N, D=np.eye(2 * m), L=L)


# --- uncertainty -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiagonalPowers:
    """``F(delta) = diag(delta**k for k in exponents)``."""

    exponents: tuple

    def __call__(self, delta):
        return np.diag([complex(delta) ** int(k) for k in self.exponents]).astype(complex)

    @property
    def size(self):
        return len(self.exponents)

    def to_dict(self):
        return {"diag_powers": [int(k) for k in self.exponents]}


@dataclass(frozen=True, eq=False)
class ConstantFactor:
    """``F(delta) = delta * F0`` when ``scaled`` else the constant ``F0``."""

    matrix: np.ndarray
    scaled: bool = False

    def __call__(self, delta):
        F0 = np.atleast_2d(np.asarray(self.matrix, dtype=complex))
        return delta * F0 if self.scaled else F0

    @property
    def size(self):
        return np.atleast_2d(self.matrix).shape[0]

    def to_dict(self):
        return {"constant": np.atleast_2d(self.matrix), "scaled": bool(self.scaled)}


@dataclass(frozen=True, eq=False)
class UncertaintyModel:
    """Norm-bounded structured uncertainty.

    ``[dA; dC] = [H1; H3] F1(delta) E`` and ``dB = H2 F2(delta) G``, with
    ``F1``, ``F2`` callables of the scalar uncertain parameter ``delta``.
    """

    H1: np.ndarray
    H3: np.ndarray
    E: np.ndarray
    H2: np.ndarray
    G: np.ndarray
    F1: object
    F2: object
    mu: float = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("H1", "H3", "E", "H2", "G"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=complex)))
        r1, r2 = self.r1, self.r2
        if self.H1.shape[1] != r1 or self.H3.shape[1] != r1:
            raise InputError(f"H1/H3 need {r1} columns to match E, got {self.H1.shape}, {self.H3.shape}")
        if self.H2.shape[1] != r2:
            raise InputError(f"H2 needs {r2} columns to match G, got {self.H2.shape}")
        if self.H1.shape[0] != self.E.shape[1]:
            raise InputError("H1 rows must equal E columns (state dimension)")

    @property
    def r1(self):
        return self.E.shape[0]

    @property
    def r2(self):
        return self.G.shape[0]

    def validate_for(self, plant):
        n2, m2 = 2 * plant.n, 2 * plant.m
        checks = {
            "H1": (self.H1.shape, (n2, self.r1)),
            "H3": (self.H3.shape, (m2, self.r1)),
            "E": (self.E.shape, (self.r1, n2)),
            "H2": (self.H2.shape, (n2, self.r2)),
            "G": (self.G.shape, (self.r2, m2)),
        }
        for name, (got, want) in checks.items():
            if got != want:
                raise InputError(f"{name} has shape {got}, expected {want}")
        for name, F, r in (("F1", self.F1, self.r1), ("F2", self.F2, self.r2)):
            shape = np.atleast_2d(F(1.0)).shape
            if shape != (r, r):
                raise InputError(f"{name}(delta) has shape {shape}, expected {(r, r)}")

    def contraction_margin(self, deltas=np.linspace(-1.0, 1.0, 41)):
        """``1 - max ||F(delta)||_2`` over the sampled deltas (>= 0 when admissible)."""
        worst = 0.0
        for d in deltas:
            for F in (self.F1, self.F2):
                Fd = np.atleast_2d(F(d))
                if Fd.size:
                    worst = max(worst, np.linalg.norm(Fd, 2))
        return 1.0 - worst

    def nominal(self):
        """Same channel sizes, all factors zero."""
        return UncertaintyModel(
            H1=np.zeros_like(self.H1), H3=np.zeros_like(self.H3), E=np.zeros_like(self.E),
            H2=np.zeros_like(self.H2), G=np.zeros_like(self.G), F1=self.F1, F2=self.F2,
            mu=0.0, meta={"kind": "nominal"},
        )


def apply_uncertainty(plant, model, delta):
    """Perturbations ``(dA, dB, dC)`` at the scalar ``delta`` (``|delta| <= 1``)."""
    if abs(delta) > 1.0 + 1e-12:
        raise InputError(f"|delta| must not exceed 1, got {delta}")
    if plant is not None:
        model.validate_for(plant)
    F1 = np.atleast_2d(model.F1(delta))
    F2 = np.atleast_2d(model.F2(delta))
    dA = model.H1 @ F1 @ model.E
    dC = model.H3 @ F1 @ model.E
    dB = model.H2 @ F2 @ model.G
    return dA, dB, dC


@dataclass(frozen=True)
class UncertainRealizabilityReport:
    lyapunov_residual: float
    relation_residual: float
    tol: float

    @property
    def ok(self):
        return self.lyapunov_residual <= self.tol and self.relation_residual <= self.tol


def check_uncertain_realizability(plant, theta, dA, dB, dC, tol=None):
    """Residual norms of the realizability constraints on ``(dA, dB, dC)``.

    ``dA Theta + Theta dA^H + B J dB^H + dB J B^H + dB J dB^H`` and
    ``dB + Theta dC^H J``. Reported, never enforced.
    """
    if tol is None:
        tol = default_tolerance(plant)
    theta = np.asarray(theta, dtype=complex)
    dA, dB, dC = (np.asarray(x, dtype=complex) for x in (dA, dB, dC))
    if dA.shape != plant.A.shape or dB.shape != plant.B.shape or dC.shape != plant.C.shape:
        raise InputError("perturbation shapes do not match the plant")
    Jm = J(plant.m)
    B = plant.B
    H = lambda X: X.conj().T  # noqa: E731
    first = dA @ theta + theta @ H(dA) + B @ Jm @ H(dB) + dB @ Jm @ H(B) + dB @ Jm @ H(dB)
    second = dB + theta @ H(dC) @ Jm
    return UncertainRealizabilityReport(
        lyapunov_residual=float(np.linalg.norm(first)),
        relation_residual=float(np.linalg.norm(second)),
        tol=tol,
    )


# --- squeezer uncertainty families ----------------------------------------


def kappa_uncertainty(mu, kappa):
    """Uncertainty in ``alpha = sqrt(kappa)``: ``alpha -> alpha (1 + mu delta)``."""
    a = np.sqrt(kappa)
    I2 = np.eye(2)
    H1 = np.hstack([2 * mu * a**2 * I2, mu**2 * a**2 * I2])
    E = -0.5 * np.vstack([I2, I2])
    H3 = np.hstack([-2 * mu * a * I2, np.zeros((2, 2))])
    return UncertaintyModel(
        H1=H1, H3=H3, E=E, H2=-mu * a * I2, G=I2,
        F1=DiagonalPowers((1, 1, 2, 2)), F2=DiagonalPowers((1, 1)),
        mu=mu, meta={"kind": "squeezer-kappa", "kappa": kappa},
    )


def chi_uncertainty(mu, chi):
    """Uncertainty in the nonlinearity: ``chi -> chi (1 + mu delta)``."""
    Z = np.zeros((2, 2))
    return UncertaintyModel(
        H1=np.array([[0.0, -mu], [-mu, 0.0]]), H3=Z, E=chi * np.eye(2), H2=Z, G=Z,
        F1=DiagonalPowers((1, 1)), F2=ConstantFactor(Z),
        mu=mu, meta={"kind": "squeezer-chi", "chi": chi},
    )
