"""Command-line front end.

Subcommands
-----------
realizability   physical-realizability report (+ perturbation residuals per delta)
kalman          complex Kalman filter and its error responses
hinf            robust H-infinity estimator, assumption report and error responses
response        error responses of the robust, Kalman and nominal H-infinity filters
sweep           feasibility / performance table over a (gamma, eps1, eps2) grid

Exit codes
----------
0 success, 2 parse or configuration error, 3 precondition or realizability
failure, 4 synthesis infeasible, 5 numerical failure.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import (
    dumps,
    encode_matrix,
    encode_real,
    encode_vector,
    decode_matrix,
    load_config,
)
from .errors import (
    ConfigError,
    InfeasibleError,
    InputError,
    NumericalError,
    PreconditionError,
)
from .freq import error_system, estimator_tf, freq_response, hinf_norm, linf_norm, select_channel
from .hinf import (
    VARIANTS,
    SynthesisParams,
    canonical_variant,
    build_scaled_plant,
    check_assumptions,
    design_robust_estimator,
)
from .kalman import kalman_filter
from .model import apply_uncertainty, check_physical_realizability, check_uncertain_realizability

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_INFEASIBLE = 4
EXIT_NUMERICAL = 5

SWEEP_AXES = ("gamma", "eps1", "eps2")


class CheckFailed(Exception):
    """A check ran to completion and reported failure (exit code 3)."""


# --- helpers -----------------------------------------------------------------


def _spectrum(M):
    return encode_vector(np.sort_complex(np.linalg.eigvals(M)))


def _delta_tag(delta):
    return repr(float(delta))


def _perturbations(cfg, delta):
    p = cfg.plant
    if cfg.uncertainty is None:
        return np.zeros_like(p.A), np.zeros_like(p.B), np.zeros_like(p.C)
    return apply_uncertainty(p, cfg.uncertainty, delta)


def _require_uncertainty(cfg):
    if cfg.uncertainty is None:
        raise ConfigError("$.uncertainty: required for robust synthesis")
    if cfg.synthesis is None:
        raise ConfigError("$.synthesis: required for robust synthesis")


def write_response_csv(path, response):
    """Rows ``omega, re, im, magnitude_db`` with 17 significant digits."""
    vals = np.asarray(response.values)
    if vals.ndim != 1:
        raise InputError("CSV export needs a single-input single-output response")
    mags = response.magnitudes_db
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega", "re", "im", "magnitude_db"])
        for om, v, db in zip(response.omegas, vals, mags):
            w.writerow(["%.17g" % om, "%.17g" % v.real, "%.17g" % v.imag, "%.17g" % db])


def _responses(cfg, est, prefix, out, deltas, channel, omegas):
    """Error responses for each delta; one CSV per (delta, output)."""
    S = cfg.S
    rows = []
    for delta in deltas:
        dA, dB, dC = _perturbations(cfg, delta)
        sys_ = select_channel(error_system(cfg.plant, dA, dB, dC, S, est), channel)
        n_out = sys_.C.shape[0]
        entry = {"delta": float(delta), "files": []}
        for o in range(n_out):
            sub = type(sys_)(sys_.A, sys_.B, sys_.C[o : o + 1], sys_.D[o : o + 1])
            resp = freq_response(sub, omegas)
            name = f"{prefix}_delta_{_delta_tag(delta)}"
            name += f"_out{o}.csv" if n_out > 1 else ".csv"
            write_response_csv(out / name, resp)
            entry["files"].append(name)
        resp = freq_response(sys_, omegas)
        w_pk, pk = resp.peak()
        entry["grid_peak"] = {"omega": w_pk, "magnitude": pk}
        entry["linf_norm"] = encode_real(linf_norm(sys_)[0])
        entry["hinf_norm"] = encode_real(hinf_norm(sys_))
        entry["stable"] = bool(sys_.is_stable)
        rows.append(entry)
    return rows


def _write_json(out, name, obj):
    (out / name).write_text(dumps(obj))


def _care_summary(sol):
    return {
        "X": encode_matrix(sol.X),
        "eigenvalues": [float(v) for v in np.linalg.eigvalsh(sol.X)],
        "residual_norm": float(sol.residual_norm),
        "relative_residual": float(sol.relative_residual),
        "closed_loop_eigs": encode_vector(np.sort_complex(sol.closed_loop_eigs)),
        "is_stabilizing": bool(sol.is_stabilizing),
        "is_psd": bool(sol.is_psd),
    }


def _plain(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, (bool, np.bool_)):
            out[k] = bool(v)
        elif isinstance(v, (int, np.integer)):
            out[k] = int(v)
        else:
            out[k] = encode_real(v)
    return out


def load_estimator(path):
    """Read ``A_K``, ``B_K``, ``C_K`` back from a ``hinf.json`` result file."""
    d = json.loads(Path(path).read_text())
    est = d["estimator"]
    return tuple(decode_matrix(est[k], f"$.estimator.{k}") for k in ("A_K", "B_K", "C_K"))


# --- commands ----------------------------------------------------------------


def cmd_realizability(cfg, args, out):
    """Physical-realizability report, plus perturbation residuals per delta."""
    rep = check_physical_realizability(cfg.plant)
    result = {
        "ok": bool(rep.ok),
        "failed": rep.failed,
        "message": rep.message,
        "theta": encode_matrix(rep.theta),
        "residuals": {k: float(v) for k, v in rep.residuals.items()},
        "inertia": list(rep.inertia),
        "tol": float(rep.tol),
    }
    if cfg.uncertainty is not None:
        unc = []
        for delta in args.deltas:
            dA, dB, dC = _perturbations(cfg, delta)
            u = check_uncertain_realizability(cfg.plant, rep.theta, dA, dB, dC, tol=rep.tol)
            unc.append({
                "delta": float(delta),
                "lyapunov_residual": u.lyapunov_residual,
                "relation_residual": u.relation_residual,
                "ok": bool(u.ok),
            })
        result["uncertain"] = unc
    _write_json(out, "realizability.json", result)
    status = "pass" if rep.ok else f"FAIL ({rep.failed}): {rep.message}"
    print(f"realizability: {status}")
    if not rep.ok:
        raise CheckFailed(rep.message)


def cmd_kalman(cfg, args, out):
    """Complex Kalman filter and its error responses."""
    kf = kalman_filter(cfg.plant, cfg.S)
    responses = _responses(cfg, kf, "kalman_error", out, args.deltas, args.channel, args.omegas)
    result = {
        "P": encode_matrix(kf.P),
        "A_e": encode_matrix(kf.A_e),
        "K_e": encode_matrix(kf.K_e),
        "L_e": encode_matrix(kf.L_e),
        "relative_residual": float(kf.residual),
        "A_e_spectrum": _spectrum(kf.A_e),
        "channel": args.channel,
        "responses": responses,
    }
    _write_json(out, "kalman.json", result)
    print(f"kalman: relative residual {kf.residual:.3e}, {len(responses)} response(s) written")


def cmd_hinf(cfg, args, out):
    """Robust H-infinity estimator, assumption report and error responses."""
    _require_uncertainty(cfg)
    params = cfg.synthesis
    report = check_assumptions(build_scaled_plant(cfg.plant, cfg.uncertainty, params, cfg.S), params)
    base = {
        "params": {"gamma": params.gamma, "eps1": params.eps1, "eps2": params.eps2},
        "variant": args.variant,
        "assumptions": _plain(report.as_dict()),
    }
    try:
        design = design_robust_estimator(cfg.plant, cfg.uncertainty, params, cfg.S, variant=args.variant)
    except InfeasibleError as exc:
        base.update(feasible=False, failed_condition=exc.condition, message=exc.detail)
        _write_json(out, "hinf.json", base)
        print(f"hinf: infeasible, condition ({exc.condition}): {exc.detail}")
        raise
    est = design.estimator
    tf = estimator_tf(est)
    responses = _responses(cfg, est, "hinf_error", out, args.deltas, args.channel, args.omegas)
    base.update(
        feasible=True,
        X=_care_summary(design.X),
        Y=_care_summary(design.Y),
        coupling_margin=float(design.coupling_margin),
        estimator={
            "A_K": encode_matrix(est.A_K),
            "B_K": encode_matrix(est.B_K),
            "C_K": encode_matrix(est.C_K),
            "spectrum": _spectrum(est.A_K),
            "stable": bool(est.is_stable),
        },
        transfer_function={
            "num": [[encode_vector(c) for c in row] for row in tf.num],
            "den": encode_vector(tf.den),
        },
        channel=args.channel,
        responses=responses,
    )
    _write_json(out, "hinf.json", base)
    print(f"hinf: feasible, coupling margin {design.coupling_margin:.6g}, estimator stable: {est.is_stable}")


def cmd_response(cfg, args, out):
    """Error responses of the robust, Kalman and nominal H-infinity filters."""
    _require_uncertainty(cfg)
    filters = {}
    design = design_robust_estimator(cfg.plant, cfg.uncertainty, cfg.synthesis, cfg.S, variant=args.variant)
    filters["robust"] = design.estimator
    filters["kalman"] = kalman_filter(cfg.plant, cfg.S)
    nominal = design_robust_estimator(
        cfg.plant, cfg.uncertainty.nominal(), cfg.synthesis, cfg.S, variant=args.variant
    )
    filters["nominal_hinf"] = nominal.estimator
    result = {"channel": args.channel, "filters": {}}
    for name, est in filters.items():
        result["filters"][name] = _responses(cfg, est, f"{name}_error", out, args.deltas, args.channel, args.omegas)
    _write_json(out, "response.json", result)
    for name, rows in result["filters"].items():
        peaks = ", ".join(f"delta={r['delta']!r}: {r['grid_peak']['magnitude']:.6g}" for r in rows)
        print(f"{name}: peak |G_e| {peaks}")


def parse_grid(spec, defaults):
    """``"gamma=0.5:1:6;eps1=0.2,0.3"`` -> list of (gamma, eps1, eps2).

    Each axis is either ``start:stop:num`` (linearly spaced, inclusive) or a
    comma-separated list. Axes left out take their value from ``defaults``.
    """
    axes = {}
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        if "=" not in part:
            raise ConfigError(f"--grid: '{part}' is not of the form axis=values")
        key, val = (s.strip() for s in part.split("=", 1))
        if key not in SWEEP_AXES:
            raise ConfigError(f"--grid: unknown axis '{key}' (expected {', '.join(SWEEP_AXES)})")
        try:
            if ":" in val:
                a, b, n = val.split(":")
                pts = np.linspace(float(a), float(b), int(n)).tolist()
            else:
                pts = [float(x) for x in val.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"--grid: cannot parse values for '{key}': {val!r}") from exc
        if not all(np.isfinite(pts)):
            raise ConfigError(f"--grid: axis '{key}' has non-finite values")
        axes[key] = pts
    for key in SWEEP_AXES:
        if key not in axes:
            if defaults is None:
                raise ConfigError(f"--grid: axis '{key}' missing and config has no synthesis block")
            axes[key] = [getattr(defaults, key)]
    points = [(g, e1, e2) for g in axes["gamma"] for e1 in axes["eps1"] for e2 in axes["eps2"]]
    if not points:
        raise ConfigError("--grid: the grid is empty")
    return points


def _sweep_point(cfg, args, point):
    g, e1, e2 = point
    row = {"gamma": g, "eps1": e1, "eps2": e2, "feasible": 0, "failed_condition": "",
           "coupling_margin": np.nan, "hinf_norm": np.nan, "linf_peak": np.nan}
    try:
        params = SynthesisParams(g, e1, e2)
        design = design_robust_estimator(cfg.plant, cfg.uncertainty, params, cfg.S, variant=args.variant)
    except InfeasibleError as exc:
        row["failed_condition"] = exc.condition
        return row
    except (NumericalError, InputError) as exc:
        row["failed_condition"] = type(exc).__name__
        return row
    dA, dB, dC = _perturbations(cfg, 1.0)
    sys_ = select_channel(error_system(cfg.plant, dA, dB, dC, cfg.S, design.estimator), args.channel)
    row.update(
        feasible=1,
        coupling_margin=design.coupling_margin,
        hinf_norm=hinf_norm(sys_),
        linf_peak=linf_norm(sys_)[0],
    )
    return row


def cmd_sweep(cfg, args, out):
    """Feasibility and delta = 1 error norms over a (gamma, eps1, eps2) grid."""
    _require_uncertainty(cfg)
    if args.grid is None:
        raise ConfigError("--grid is required for sweep")
    points = parse_grid(args.grid, cfg.synthesis)
    cols = ["gamma", "eps1", "eps2", "feasible", "failed_condition", "coupling_margin", "hinf_norm", "linf_peak"]
    n_ok = 0
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for point in points:
            row = _sweep_point(cfg, args, point)
            n_ok += row["feasible"]
            w.writerow([
                row[c] if isinstance(row[c], (int, str)) else "%.17g" % row[c] for c in cols
            ])
    print(f"sweep: {n_ok}/{len(points)} grid point(s) feasible")


COMMANDS = {
    "realizability": cmd_realizability,
    "kalman": cmd_kalman,
    "hinf": cmd_hinf,
    "response": cmd_response,
    "sweep": cmd_sweep,
}


# --- entry point -------------------------------------------------------------


def _delta_list(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty delta list")
    if any(abs(v) > 1 for v in vals):
        raise argparse.ArgumentTypeError("|delta| must not exceed 1")
    return vals


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qhinf",
        description="Robust H-infinity and Kalman estimation for linear quantum systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.strip().splitlines()[0])
        p.add_argument("--config", required=True, help="problem description (JSON)")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("--delta", type=_delta_list, default=None,
                       help="comma-separated uncertainty values, overrides analysis.deltas")
        p.add_argument("--channel", type=int, default=None, help="disturbance input index")
        p.add_argument("--variant", choices=sorted(VARIANTS), default=None,
                       help="estimator-gain formula (default: the config's, else 'reference')")
        if name == "sweep":
            p.add_argument("--grid", default=None,
                           help="e.g. 'gamma=0.5:1:6;eps1=0.2,0.4;eps2=0.6'")
    return parser


def run(argv=None):
    args = build_parser().parse_args(argv)
    if not hasattr(args, "grid"):
        args.grid = None
    try:
        cfg = load_config(args.config)
        args.deltas = list(cfg.analysis.deltas) if args.delta is None else args.delta
        args.channel = cfg.analysis.channel if args.channel is None else args.channel
        if not 0 <= args.channel < 2 * cfg.plant.m:
            raise ConfigError(f"--channel: {args.channel} out of range for {2 * cfg.plant.m} inputs")
        args.variant = canonical_variant(args.variant or cfg.variant)
        args.omegas = cfg.analysis.omega.values()
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, args, out)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailed:
        return EXIT_PRECONDITION
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
