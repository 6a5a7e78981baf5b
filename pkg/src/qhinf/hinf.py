"""Robust H-infinity estimator synthesis for uncertain quantum plants.

Pipeline: the uncertain estimation problem is rewritten as a scaled H-infinity
control problem (:func:`build_scaled_plant`), its direct feedthrough ``D11``
is removed by loop shifting (:func:`loop_shift`), the two Riccati equations
are solved (:func:`solve_X_riccati`, :func:`solve_Y_riccati`), the coupling
condition is tested (:func:`check_coupling`) and the estimator realized
(:func:`synthesize`). :func:`design_robust_estimator` runs all of it.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .care import (
    CareProblem,
    hermitian_part,
    is_psd,
    solve_care,
    spectral_abscissa,
    spectral_radius,
)
from .errors import (
    InfeasibleError,
    InputError,
    NumericalError,
    PreconditionError,
)

# gain prefactor exponent and coupling exponent of the B_K formula, see synthesize()
VARIANTS = {
    "reference": (-2, 0),
    "scaled-coupling": (-2, -2),
    "printed": (2, 0),
}


def canonical_variant(name):
    """Validate an estimator-gain variant name and return it."""
    if name not in VARIANTS:
        raise InputError(f"unknown variant {name!r}; choose from {sorted(VARIANTS)}")
    return name

A4_GRID = np.concatenate([[0.0], np.logspace(-3, 3, 400)])
RANK_TOL = 1e-6
MAX_COUPLING_COND = 1e12


@dataclass(frozen=True)
class SynthesisParams:
    gamma: float
    eps1: float
    eps2: float

    def __post_init__(self):
        for name in ("gamma", "eps1", "eps2"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise InputError(f"{name} must be positive, got {v}")


@dataclass(frozen=True, eq=False)
class ScaledPlant:
    """Scaled control problem: ``x' = A x + B1 w + B2 u``, ``z = C1 x + D11 w + D12 u``,
    ``y = S C2 x + S D21 w + S D22 u``.

    ``nw``, ``r1``, ``r2`` and ``p`` record the widths of the disturbance,
    the two uncertainty channels and the estimated output.
    """

    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    D11: np.ndarray
    D12: np.ndarray
    C2: np.ndarray
    D21: np.ndarray
    D22: np.ndarray
    S: np.ndarray
    nw: int
    r1: int
    r2: int
    p: int

    @property
    def B(self):
        return self.B1[:, : self.nw]

    @property
    def D(self):
        return self.D21[:, : self.nw]


def build_scaled_plant(plant, uncertainty, params, S):
    uncertainty.validate_for(plant)
    g, e1, e2 = params.gamma, params.eps1, params.eps2
    S = np.atleast_2d(np.asarray(S, dtype=complex))
    if S.shape != (plant.m, 2 * plant.m):
        raise InputError(f"S has shape {S.shape}, expected {(plant.m, 2 * plant.m)}")
    n2, nw, p = 2 * plant.n, 2 * plant.m, plant.p
    r1, r2 = uncertainty.r1, uncertainty.r2
    u = uncertainty
    B1 = np.hstack([plant.B, (g / e1) * u.H1, (g / e2) * u.H2])
    C1 = np.vstack([e1 * u.E, np.zeros((r2, n2)), plant.L])
    D11 = np.zeros((r1 + r2 + p, nw + r1 + r2), dtype=complex)
    D11[r1 : r1 + r2, :nw] = e2 * u.G
    D12 = np.vstack([np.zeros((r1 + r2, p)), -np.eye(p)]).astype(complex)
    D21 = np.hstack([plant.D, (g / e1) * u.H3, np.zeros((nw, r2))])
    return ScaledPlant(
        A=plant.A.copy(), B1=B1, B2=np.zeros((n2, p), dtype=complex), C1=C1, D11=D11,
        D12=D12, C2=plant.C.copy(), D21=D21, D22=np.zeros((nw, p), dtype=complex), S=S,
        nw=nw, r1=r1, r2=r2, p=p,
    )


def _inv_sqrt_psd(M):
    w, V = np.linalg.eigh(hermitian_part(M))
    if w.size and w.min() <= 0:
        raise InputError(f"matrix is not positive definite (min eigenvalue {w.min():.3e})")
    return (V / np.sqrt(w)) @ V.conj().T


def _inv_psd(M):
    w, V = np.linalg.eigh(hermitian_part(M))
    if w.size and w.min() <= 0:
        raise PreconditionError(f"matrix is not positive definite (min eigenvalue {w.min():.3e})")
    return (V / w) @ V.conj().T


@dataclass(frozen=True, eq=False)
class BarredPlant:
    A_bar: np.ndarray
    B1_bar: np.ndarray
    B2_bar: np.ndarray
    C1_bar: np.ndarray
    D11_bar: np.ndarray
    D12_bar: np.ndarray
    C2_bar: np.ndarray
    D21_bar: np.ndarray
    D22_bar: np.ndarray
    S_bar: np.ndarray
    E1_bar: np.ndarray
    E2_bar: np.ndarray
    D_inf: np.ndarray = None
    R1: np.ndarray = None
    R1_tilde: np.ndarray = None


def _with_E(A_bar, B1_bar, C1_bar, D12_bar, C2_bar, D21_bar, S, **extra):
    E1 = D12_bar.conj().T @ D12_bar
    E2 = S @ D21_bar @ D21_bar.conj().T @ S.conj().T
    n2 = A_bar.shape[0]
    kw = dict(
        A_bar=A_bar, B1_bar=B1_bar, B2_bar=extra.pop("B2_bar", np.zeros((n2, D12_bar.shape[1]), complex)),
        C1_bar=C1_bar, D11_bar=extra.pop("D11_bar", np.zeros((C1_bar.shape[0], B1_bar.shape[1]), complex)),
        D12_bar=D12_bar, C2_bar=C2_bar, D21_bar=D21_bar,
        D22_bar=extra.pop("D22_bar", np.zeros((C2_bar.shape[0], D12_bar.shape[1]), complex)),
        S_bar=S, E1_bar=E1, E2_bar=E2,
    )
    kw.update(extra)
    return BarredPlant(**kw)


def loop_shift(scaled):
    """Remove ``D11`` by loop shifting.

    ``D11`` is partitioned as in the robust problem: rows ``(r1 + r2 | p)`` and
    columns ``(nw + r1 | r2)``. ``D_inf`` is formed from that partition; for
    every plant produced by :func:`build_scaled_plant` it is zero, and a
    nonzero ``D_inf`` is rejected because it would feed back through the
    (absent) control input.
    """
    sp = scaled
    D11 = sp.D11
    rows_top = sp.r1 + sp.r2
    cols_left = sp.nw + sp.r1
    D1111 = D11[:rows_top, :cols_left]
    D1112 = D11[:rows_top, cols_left:]
    D1121 = D11[rows_top:, :cols_left]
    D1122 = D11[rows_top:, cols_left:]
    if D1111.size and np.linalg.norm(D1111, 2) >= 1.0:
        raise InputError(f"loop shifting needs ||D11|| < 1, got {np.linalg.norm(D1111, 2):.6f}")
    core = np.eye(cols_left) - D1111.conj().T @ D1111
    D_inf = -D1122 - D1121 @ np.linalg.solve(core, D1111.conj().T @ D1112)
    if np.abs(D_inf).max(initial=0.0) > 1e-14:
        raise InputError("nonzero D_inf: loop shifting would need a control feedthrough")

    D11t = D11.copy()
    D11t[rows_top:, cols_left:] += D_inf
    if D11t.size and np.linalg.norm(D11t, 2) >= 1.0:
        raise InputError(f"loop shifting needs ||D11|| < 1, got {np.linalg.norm(D11t, 2):.6f}")

    At, B1t, B2t, C1t = sp.A, sp.B1, sp.B2, sp.C1
    D12t, C2t, D21t = sp.D12, sp.C2, sp.D21
    R1 = np.eye(D11t.shape[1]) - D11t.conj().T @ D11t
    R1t = np.eye(D11t.shape[0]) - D11t @ D11t.conj().T
    R1_inv = np.linalg.inv(R1)
    R1_isqrt = _inv_sqrt_psd(R1)
    R1t_isqrt = _inv_sqrt_psd(R1t)
    Dh = D11t.conj().T

    return _with_E(
        A_bar=At + B1t @ R1_inv @ Dh @ C1t,
        B1_bar=B1t @ R1_isqrt,
        C1_bar=R1t_isqrt @ C1t,
        D12_bar=R1t_isqrt @ D12t,
        C2_bar=C2t + D21t @ R1_inv @ Dh @ C1t,
        D21_bar=D21t @ R1_isqrt,
        S=sp.S,
        B2_bar=B2t + B1t @ R1_inv @ Dh @ D12t,
        D22_bar=D21t @ R1_inv @ Dh @ D12t,
        D11_bar=np.zeros_like(D11t),
        D_inf=D_inf,
        R1=R1,
        R1_tilde=R1t,
    )


def closed_form_barred(plant, uncertainty, params, S):
    """Barred data written out directly for the robust-estimation structure."""
    g, e1, e2 = params.gamma, params.eps1, params.eps2
    u = uncertainty
    S = np.atleast_2d(np.asarray(S, dtype=complex))
    nw = 2 * plant.m
    W = np.eye(nw) - e2**2 * u.G.conj().T @ u.G
    Wm = _inv_sqrt_psd(W)
    n2, p = 2 * plant.n, plant.p
    return _with_E(
        A_bar=plant.A.copy(),
        B1_bar=np.hstack([plant.B @ Wm, (g / e1) * u.H1, (g / e2) * u.H2]),
        C1_bar=np.vstack([e1 * u.E, np.zeros((u.r2, n2)), plant.L]),
        D12_bar=np.vstack([np.zeros((u.r1 + u.r2, p)), -np.eye(p)]).astype(complex),
        C2_bar=plant.C.copy(),
        D21_bar=np.hstack([plant.D @ Wm, (g / e1) * u.H3, np.zeros((nw, u.r2))]),
        S=S,
    )


# --- assumptions -------------------------------------------------------------


@dataclass(frozen=True)
class AssumptionReport:
    a1_stable: bool
    a1_abscissa: float
    a2_margin: float
    a3_rank: int
    a3_required: int
    a4_ok: bool
    a4_min_sv: float
    barred_control_rank: bool
    barred_filter_rank: bool

    @property
    def a2_ok(self):
        return self.a2_margin > 0

    @property
    def a3_ok(self):
        return self.a3_rank == self.a3_required

    @property
    def all_ok(self):
        return (
            self.a1_stable and self.a2_ok and self.a3_ok and self.a4_ok
            and self.barred_control_rank and self.barred_filter_rank
        )

    def as_dict(self):
        d = dict(self.__dict__)
        d.update(a2_ok=self.a2_ok, a3_ok=self.a3_ok, all_ok=self.all_ok)
        return d


def _min_rel_sv(blocks_at, grid):
    worst = np.inf
    for w in grid:
        s = np.linalg.svd(blocks_at(w), compute_uv=False)
        if s.size == 0 or s[0] == 0:
            return 0.0
        worst = min(worst, s[-1] / s[0])
    return float(worst)


def check_assumptions(scaled, params=None, freq_grid=None):
    """Evaluate A1-A4 and the two rank conditions of the loop-shifted problem.

    Frequency-dependent conditions are sampled on ``freq_grid`` (default: 0
    plus 400 log-spaced points in ``[1e-3, 1e3]``); "full rank" means smallest
    over largest singular value above ``1e-6``.
    """
    sp = scaled
    grid = A4_GRID if freq_grid is None else np.asarray(freq_grid, dtype=float)
    n2 = sp.A.shape[0]
    I = np.eye(n2)

    absc = spectral_abscissa(sp.A)
    Gblk = sp.D11[sp.r1 : sp.r1 + sp.r2, : sp.nw]
    lam = np.linalg.eigvalsh(Gblk.conj().T @ Gblk).max(initial=0.0) if Gblk.size else 0.0
    a2_margin = float(1.0 - lam)
    SD21 = sp.S @ sp.D21
    a3_rank = int(np.linalg.matrix_rank(SD21)) if SD21.size else 0
    m = sp.S.shape[0]

    B, D = sp.B, sp.D
    a4_sv = _min_rel_sv(lambda w: np.block([[sp.A - 1j * w * I, B], [sp.C2, D]]), grid)
    d_full = np.linalg.matrix_rank(D) == D.shape[0]
    a4_ok = bool(a4_sv > RANK_TOL and d_full)

    try:
        bp = loop_shift(sp)
    except InputError:
        ctrl = filt = False
    else:
        ctrl_sv = _min_rel_sv(
            lambda w: np.block([[bp.A_bar - 1j * w * I, bp.B2_bar], [bp.C1_bar, bp.D12_bar]]), grid
        )
        filt_sv = _min_rel_sv(
            lambda w: np.block(
                [[bp.A_bar - 1j * w * I, bp.B1_bar], [bp.S_bar @ bp.C2_bar, bp.S_bar @ bp.D21_bar]]
            ),
            grid,
        )
        ctrl = bool(ctrl_sv > RANK_TOL)
        filt = bool(filt_sv > RANK_TOL)

    return AssumptionReport(
        a1_stable=bool(absc < 0), a1_abscissa=absc, a2_margin=a2_margin,
        a3_rank=a3_rank, a3_required=m, a4_ok=a4_ok, a4_min_sv=a4_sv,
        barred_control_rank=ctrl, barred_filter_rank=filt,
    )


# --- Riccati equations -------------------------------------------------------


def _H(X):
    return X.conj().T


def x_riccati_terms(bp, gamma, X):
    E1i = np.linalg.inv(bp.E1_bar)
    P = np.eye(bp.C1_bar.shape[0]) - bp.D12_bar @ E1i @ _H(bp.D12_bar)
    return [
        _H(bp.A_bar) @ X,
        X @ bp.A_bar,
        X @ (gamma**-2 * bp.B1_bar @ _H(bp.B1_bar)) @ X,
        _H(bp.C1_bar) @ P @ bp.C1_bar,
    ]


def y_riccati_terms(bp, gamma, Y):
    E2i = _inv_psd(bp.E2_bar)
    G = gamma**-1 * bp.B1_bar @ _H(bp.D21_bar) + gamma * Y @ _H(bp.C2_bar)
    return [
        bp.A_bar @ Y,
        Y @ _H(bp.A_bar),
        Y @ _H(bp.C1_bar) @ bp.C1_bar @ Y,
        gamma**-2 * bp.B1_bar @ _H(bp.B1_bar),
        -G @ _H(bp.S_bar) @ E2i @ bp.S_bar @ _H(G),
    ]


def _literal(terms):
    total = sum(terms)
    scale = sum(np.linalg.norm(t) for t in terms)
    norm = float(np.linalg.norm(total))
    return norm, (norm / scale if scale > 0 else norm)


def x_riccati_residual(bp, gamma, X):
    """``(absolute, relative)`` residual of the X equation in its original, unrearranged form."""
    return _literal(x_riccati_terms(bp, gamma, X))


def y_riccati_residual(bp, gamma, Y):
    return _literal(y_riccati_terms(bp, gamma, Y))


def solve_X_riccati(barred, gamma):
    """Stabilizing ``X >= 0`` of ``A^H X + X A + g^-2 X B1 B1^H X + C1^H (I - D12 E1^-1 D12^H) C1 = 0``."""
    bp = barred
    E1i = np.linalg.inv(bp.E1_bar)
    P = np.eye(bp.C1_bar.shape[0]) - bp.D12_bar @ E1i @ _H(bp.D12_bar)
    problem = CareProblem(
        A=bp.A_bar,
        R=gamma**-2 * bp.B1_bar @ _H(bp.B1_bar),
        Q=_H(bp.C1_bar) @ P @ bp.C1_bar,
    )
    sol = solve_care(problem)
    norm, rel = x_riccati_residual(bp, gamma, sol.X)
    return replace(sol, residual_norm=norm, relative_residual=rel)


def solve_Y_riccati(barred, gamma):
    """Stabilizing ``Y >= 0`` of the filter-side equation.

    Completing the square with ``T = g^-1 B1 D21^H``, ``U = g C2^H`` and
    ``W = S^H E2^-1 S`` gives
    ``(A - TWU^H) Y + Y (A - TWU^H)^H + Y (C1^H C1 - U W U^H) Y + g^-2 B1 B1^H - T W T^H = 0``,
    which is solved in adjoint form. The stored residual is the one of the
    uncompleted equation.
    """
    bp = barred
    E2i = _inv_psd(bp.E2_bar)
    T = gamma**-1 * bp.B1_bar @ _H(bp.D21_bar)
    U = gamma * _H(bp.C2_bar)
    W = _H(bp.S_bar) @ E2i @ bp.S_bar
    drift = bp.A_bar - T @ W @ _H(U)
    problem = CareProblem(
        A=_H(drift),
        R=_H(bp.C1_bar) @ bp.C1_bar - U @ W @ _H(U),
        Q=gamma**-2 * bp.B1_bar @ _H(bp.B1_bar) - T @ W @ _H(T),
    )
    sol = solve_care(problem)
    norm, rel = y_riccati_residual(bp, gamma, sol.X)
    return replace(sol, residual_norm=norm, relative_residual=rel)


def check_coupling(X, Y, gamma):
    """``I - g^-2 X Y > 0``, tested as ``rho(XY) < g^2``. Returns ``(ok, margin)``."""
    margin = gamma**2 - spectral_radius(np.asarray(X) @ np.asarray(Y))
    return bool(margin > 0), float(margin)


# --- estimator ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Estimator:
    """``x_hat' = A_K x_hat + B_K y``, ``z_hat = C_K x_hat``."""

    A_K: np.ndarray
    B_K: np.ndarray
    C_K: np.ndarray

    @property
    def spectrum(self):
        return np.linalg.eigvals(self.A_K)

    @property
    def is_stable(self):
        return spectral_abscissa(self.A_K) < 0


def synthesize(barred, X, Y, gamma, variant="reference"):
    """Realize the estimator from the two Riccati solutions.

    ``B_K = g^a (I - g^b Y X)^-1 (Y C2^H S^H + g^-2 B1 D21^H S^H) E2^-1`` with
    ``(a, b)`` chosen by ``variant``:

    ``"reference"`` ``(-2, 0)``
        reproduces the reference estimators of the two squeezer examples.
    ``"printed"`` ``(2, 0)``
        the prefactor ``g^2`` taken literally from the closed-form gain.
    ``"scaled-coupling"`` ``(-2, -2)``
        inverse taken on ``I - g^-2 Y X``, matching the coupling condition.

    ``A_K = A - B_K S C2 + g^-2 (B1 - B_K S D21) B1^H X`` and
    ``C_K = -E1^-1 D12^H C1`` in every variant.
    """
    variant = canonical_variant(variant)
    a, b = VARIANTS[variant]
    bp = barred
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    k = X.shape[0]
    M = np.eye(k) - gamma**b * Y @ X
    if np.linalg.cond(M) > MAX_COUPLING_COND:
        raise NumericalError("I - YX is numerically singular; gamma is at the feasibility boundary")
    E2i = _inv_psd(bp.E2_bar)
    SH = _H(bp.S_bar)
    rhs = Y @ _H(bp.C2_bar) @ SH + gamma**-2 * bp.B1_bar @ _H(bp.D21_bar) @ SH
    B_K = gamma**a * np.linalg.solve(M, rhs) @ E2i
    A_K = (
        bp.A_bar
        - B_K @ bp.S_bar @ bp.C2_bar
        + gamma**-2 * (bp.B1_bar - B_K @ bp.S_bar @ bp.D21_bar) @ _H(bp.B1_bar) @ X
    )
    C_K = -np.linalg.inv(bp.E1_bar) @ _H(bp.D12_bar) @ bp.C1_bar
    return Estimator(A_K=A_K, B_K=B_K, C_K=C_K)


@dataclass(frozen=True, eq=False)
class HinfDesign:
    params: SynthesisParams
    scaled: ScaledPlant
    barred: BarredPlant
    X: object
    Y: object
    coupling_margin: float
    estimator: Estimator
    variant: str = "reference"
    extra: dict = field(default_factory=dict)


def design_robust_estimator(plant, uncertainty, params, S, variant="reference"):
    """Run the full synthesis; raise :class:`InfeasibleError` naming the failed condition."""
    scaled = build_scaled_plant(plant, uncertainty, params, S)
    barred = loop_shift(scaled)
    g = params.gamma
    try:
        X = solve_X_riccati(barred, g)
    except NumericalError as exc:
        raise InfeasibleError("a", str(exc)) from exc
    if not X.is_psd:
        raise InfeasibleError("a", "X is not positive semidefinite")
    if not X.is_stabilizing:
        raise InfeasibleError("a", "X is not stabilizing")
    try:
        Y = solve_Y_riccati(barred, g)
    except NumericalError as exc:
        raise InfeasibleError("b", str(exc)) from exc
    if not Y.is_psd:
        raise InfeasibleError("b", "Y is not positive semidefinite")
    if not Y.is_stabilizing:
        raise InfeasibleError("b", "Y is not stabilizing")
    ok, margin = check_coupling(X.X, Y.X, g)
    if not ok:
        raise InfeasibleError("c", f"rho(XY) exceeds gamma^2 by {-margin:.3e}")
    est = synthesize(barred, X.X, Y.X, g, variant=variant)
    return HinfDesign(
        params=params, scaled=scaled, barred=barred, X=X, Y=Y,
        coupling_margin=margin, estimator=est, variant=variant,
    )


def is_feasible(plant, uncertainty, params, S):
    try:
        design_robust_estimator(plant, uncertainty, params, S)
    except (InfeasibleError, NumericalError, PreconditionError):
        return False
    return True


def gamma_search(plant, uncertainty, S, eps1, eps2, lo=1e-3, hi=1e3, rtol=1e-3, max_iter=100):
    """Smallest feasible gamma (to relative tolerance ``rtol``) by bisection.

    Assumes feasibility is monotone in gamma on ``[lo, hi]``. Returns ``None``
    if ``hi`` itself is infeasible.
    """
    feas = lambda g: is_feasible(plant, uncertainty, SynthesisParams(g, eps1, eps2), S)  # noqa: E731
    if not feas(hi):
        return None
    if feas(lo):
        return lo
    for _ in range(max_iter):
        if hi / lo - 1.0 <= rtol:
            break
        mid = np.sqrt(lo * hi)
        if feas(mid):
            hi = mid
        else:
            lo = mid
    return hi
