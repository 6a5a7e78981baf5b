"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""

import json
import time

import numpy as np

from qhinf.care import CareProblem, is_psd, solve_care
from qhinf.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, EXIT_PRECONDITION, run
from qhinf.config import bundled_config
from qhinf.freq import error_system, estimator_tf, freq_response, select_channel
from qhinf.hinf import (
    build_scaled_plant,
    check_coupling,
    closed_form_barred,
    design_robust_estimator,
    loop_shift,
    x_riccati_residual,
    y_riccati_residual,
)
from qhinf.kalman import kalman_filter, kalman_residual
from qhinf.model import (
    J,
    QuantumPlant,
    apply_uncertainty,
    build_doubled,
    build_homodyne_matrix,
    check_doubled,
    check_physical_realizability,
    make_squeezer,
    plant_from_hamiltonian,
)
from qhinf.oracle import care_by_flow, kalman_by_flow

from .conftest import crandn, random_robust_instance
from .test_care import random_lqr_problem

RESULTS = []

PRINTED = {
    "example1": dict(
        A_K=[[0.1905, -1.4676], [-1.4676, 0.1905]], B_K=[[-1.4717j], [1.4717j]], C_K=[[0.1, -0.1]],
        num=[-0.2943j, -0.3759j], den=[1, -0.381, -2.118],
    ),
    "example2": dict(
        A_K=[[0.3231, -1.3660], [-1.3660, 0.3231]], B_K=[[-1.4852j], [1.4852j]], C_K=[[0.1, -0.1]],
        num=[-0.297j, -0.3098j], den=[1, -0.6461, -1.762],
    ),
}


def report(number, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def rel_coeff_err(got, want):
    return max(abs(g - w) / abs(w) for g, w in zip(got, want))


def golden_check(number, example, request, S90):
    plant, unc, params = request.getfixturevalue(example)
    ref = PRINTED[example]
    t0 = time.perf_counter()
    est = design_robust_estimator(plant, unc, params, S90).estimator
    tf = estimator_tf(est).scalar()
    elapsed = time.perf_counter() - t0
    mat_err = max(np.abs(getattr(est, k) - np.array(ref[k])).max() for k in ("A_K", "B_K", "C_K"))
    tf_err = max(rel_coeff_err(tf.num, ref["num"]), rel_coeff_err(tf.den, ref["den"]))
    ok = mat_err < 1e-3 and tf_err < 1e-3 and elapsed < 1.0
    report(number, ok, f"{example} matrices max|err| {mat_err:.2e}, TF rel err {tf_err:.2e}, {elapsed:.3f} s")


def test_criterion_01_example1_golden(request, S90):
    golden_check(1, "example1", request, S90)


def test_criterion_02_example2_golden(request, S90):
    golden_check(2, "example2", request, S90)


def test_criterion_03_riccati_certification(example1, example2, S90):
    worst_res, min_margin, ok = 0.0, np.inf, True
    for plant, unc, params in (example1, example2):
        g = params.gamma
        d = design_robust_estimator(plant, unc, params, S90)
        bp = d.barred
        for sol, literal in ((d.X, x_riccati_residual), (d.Y, y_riccati_residual)):
            rel = literal(bp, g, sol.X)[1]
            worst_res = max(worst_res, rel)
            ok &= rel < 1e-8
            ok &= np.array_equal(sol.X, sol.X.conj().T) and is_psd(sol.X)
            ok &= bool(np.max(sol.closed_loop_eigs.real) < 0)
        coupled, margin = check_coupling(d.X.X, d.Y.X, g)
        ok &= coupled and margin > 0
        min_margin = min(min_margin, margin)
    report(3, ok, f"max literal relative residual {worst_res:.2e}, min coupling margin {min_margin:.4f}")


def test_criterion_04_realizability():
    rep = check_physical_realizability(make_squeezer(4.0, 4.0, -0.5, [[0.1, -0.1]]))
    theta_err = np.abs(rep.theta - J(1)).max()
    res = max(rep.residuals.values())
    mutant = check_physical_realizability(make_squeezer(4.0, 2.0, -0.5, [[0.1, -0.1]]))
    ok = rep.ok and theta_err < 1e-10 and res < 1e-10 and not mutant.ok and mutant.failed == "b_relation"
    report(4, ok, f"Theta - J {theta_err:.1e}, residuals {res:.1e}; beta != kappa fails on '{mutant.failed}'")


def test_criterion_05_loop_shift_equivalence():
    rng = np.random.default_rng(20240501)
    n_inst, worst, worst_e2, e1_exact = 150, 0.0, 0.0, True
    fields = ("A_bar", "B1_bar", "C1_bar", "D12_bar", "C2_bar", "D21_bar")
    for _ in range(n_inst):
        plant, unc, params = random_robust_instance(rng)
        S = build_homodyne_matrix(rng.uniform(0, 2 * np.pi, plant.m))
        a = loop_shift(build_scaled_plant(plant, unc, params, S))
        b = closed_form_barred(plant, unc, params, S)
        worst = max(worst, max(np.abs(getattr(a, f) - getattr(b, f)).max() for f in fields))
        worst_e2 = max(worst_e2, np.abs(a.E2_bar - b.E2_bar).max() / max(1.0, np.abs(b.E2_bar).max()))
        e1_exact &= np.array_equal(a.E1_bar, np.eye(plant.p))
    ok = worst < 1e-12 and worst_e2 < 1e-12 and e1_exact
    report(5, ok, f"{n_inst} instances, max deviation {worst:.1e} (E2 relative {worst_e2:.1e}), E1 == I exactly: {e1_exact}")


def test_criterion_06_care_oracle():
    rng = np.random.default_rng(6)
    n_inst, worst = 60, 0.0
    for _ in range(n_inst):
        prob = random_lqr_problem(rng)
        X = solve_care(prob).X
        worst = max(worst, np.abs(X - care_by_flow(prob.A, prob.R, prob.Q)).max())
    x2 = solve_care(CareProblem(A=[[1.0]], R=[[-1.0]], Q=[[0.0]])).X[0, 0]
    x1 = solve_care(CareProblem(A=[[-1.0]], R=[[0.0]], Q=[[2.0]])).X[0, 0]
    hand = max(abs(x2 - 2.0), abs(x1 - 1.0))
    ok = worst < 1e-6 and hand < 1e-12
    report(6, ok, f"{n_inst} random instances, max |X - X_flow| {worst:.1e}; scalar cases err {hand:.1e}")


def test_criterion_07_kalman(squeezer, S90):
    kf = kalman_filter(squeezer, S90)
    res = np.linalg.norm(kalman_residual(squeezer, S90, kf.P))
    oracle = np.abs(kf.P - kalman_by_flow(squeezer.A, squeezer.B, squeezer.C, S90)).max()
    absc = np.max(np.linalg.eigvals(kf.A_e).real)
    ok = res < 1e-8 and kf.residual < 1e-8 and oracle < 1e-6 and absc < 0
    report(7, ok, f"residual {res:.1e}, |P - P_flow| {oracle:.1e}, max Re eig(A_e) {absc:.3f}")


def test_criterion_08_peak_ordering(example1, example2, S90):
    parts, ok = [], True
    for name, (plant, unc, params) in (("ex1", example1), ("ex2", example2)):
        filters = {
            "robust": design_robust_estimator(plant, unc, params, S90).estimator,
            "kalman": kalman_filter(plant, S90),
            "nominal": design_robust_estimator(plant, unc.nominal(), params, S90).estimator,
        }
        dA, dB, dC = apply_uncertainty(plant, unc, 1.0)
        peaks = {
            k: freq_response(select_channel(error_system(plant, dA, dB, dC, S90, est), 0)).peak()[1]
            for k, est in filters.items()
        }
        ok &= peaks["robust"] < peaks["kalman"] and peaks["robust"] < peaks["nominal"]
        parts.append(f"{name} robust {peaks['robust']:.4g} < nominal {peaks['nominal']:.4g}, kalman {peaks['kalman']:.4g}")
    report(8, ok, "; ".join(parts))


def test_criterion_09_structure():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(200):
        th = rng.uniform(-2 * np.pi, 2 * np.pi, int(rng.integers(1, 5)))
        S = build_homodyne_matrix(th)
        m = th.size
        P = np.eye(2 * m) - S.conj().T @ S
        worst = max(
            worst,
            np.abs(S @ S.conj().T - np.eye(m)).max(),
            np.abs(P @ P - P).max(),
            np.abs(P - P.conj().T).max(),
        )
    doubled = True
    for _ in range(50):
        n, m = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        M1 = crandn(rng, n, n)
        M2 = crandn(rng, n, n)
        M = build_doubled(M1 + M1.conj().T, M2 + M2.T)
        N = build_doubled(crandn(rng, m, n), crandn(rng, m, n))
        chi = complex(*rng.normal(size=2))
        for p in (plant_from_hamiltonian(M, N), make_squeezer(*rng.uniform(0.5, 5, 2), chi, [[1.0, 0.0]])):
            doubled &= all(check_doubled(X, tol=1e-12)[0] for X in (p.A, p.B, p.C, p.D))
        doubled &= isinstance(p, QuantumPlant)
    ok = worst < 1e-10 and doubled
    report(9, ok, f"homodyne identities max err {worst:.1e}; doubled-up structure preserved: {doubled}")


def test_criterion_10_cli_contract(tmp_path):
    identical = True
    for name in ("example1", "example2"):
        outs = []
        for rep in ("a", "b"):
            out = tmp_path / name / rep
            for cmd in ("realizability", "kalman", "hinf", "response"):
                assert run([cmd, "--config", str(bundled_config(name)), "--out", str(out)]) == EXIT_OK
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        identical &= outs[0] == outs[1] and len(outs[0]) > 0

    broken = tmp_path / "broken.json"
    broken.write_text("{ not json")
    code_parse = run(["hinf", "--config", str(broken), "--out", str(tmp_path / "x")])

    d = json.loads(bundled_config("example1").read_text())
    d["plant"] = {"kind": "raw", "A": [[-2.0, 0.5], [0.5, -2.0]], "B": [[-2.0, 0.0], [0.0, -2.0]],
                  "C": [[2.0, 0.0], [0.0, 2.0]], "D": [[1.5, 0.0], [0.0, 1.5]], "L": [[0.1, -0.1]]}
    bad_d = tmp_path / "bad_d.json"
    bad_d.write_text(json.dumps(d))
    code_d = run(["realizability", "--config", str(bad_d), "--out", str(tmp_path / "y")])

    d = json.loads(bundled_config("example1").read_text())
    d["synthesis"]["gamma"] = 0.01
    small = tmp_path / "small.json"
    small.write_text(json.dumps(d))
    code_gamma = run(["hinf", "--config", str(small), "--out", str(tmp_path / "z")])

    ok = identical and (code_parse, code_d, code_gamma) == (EXIT_CONFIG, EXIT_PRECONDITION, EXIT_INFEASIBLE)
    report(10, ok, f"repeat runs byte-identical: {identical}; exit codes parse={code_parse}, "
                   f"D!=I={code_d}, gamma=0.01={code_gamma}")
