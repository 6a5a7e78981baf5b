"""JSON problem descriptions and the complex-number codec used for results.

Complex matrices are written row-major, each entry an ``[re, im]`` pair. On
input a bare real number is also accepted for an entry. Validation errors
name the offending location as a JSON path (``$.plant.A[1][0]``); syntax
errors carry the line and column reported by the JSON parser.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InputError
from .hinf import VARIANTS, SynthesisParams, canonical_variant
from .model import (
    ConstantFactor,
    DiagonalPowers,
    HomodyneConfig,
    QuantumPlant,
    UncertaintyModel,
    build_homodyne_matrix,
    chi_uncertainty,
    kappa_uncertainty,
    make_squeezer,
)

# --- codec -----------------------------------------------------------------


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def decode_scalar(x, where):
    if _is_number(x):
        return complex(float(x), 0.0)
    if isinstance(x, list) and len(x) == 2 and all(_is_number(v) for v in x):
        return complex(float(x[0]), float(x[1]))
    raise ConfigError(f"{where}: expected a number or an [re, im] pair, got {json.dumps(x)}")


def decode_real(x, where, positive=False):
    if not _is_number(x) or not np.isfinite(x):
        raise ConfigError(f"{where}: expected a finite real number, got {json.dumps(x)}")
    if positive and x <= 0:
        raise ConfigError(f"{where}: must be positive, got {x}")
    return float(x)


def decode_matrix(x, where):
    """Row-major list of rows of complex entries -> 2-D complex array."""
    if not isinstance(x, list) or not x or not all(isinstance(r, list) for r in x):
        raise ConfigError(f"{where}: expected a non-empty list of rows")
    width = len(x[0])
    rows = []
    for i, row in enumerate(x):
        if len(row) != width:
            raise ConfigError(f"{where}[{i}]: row has {len(row)} entries, expected {width}")
        rows.append([decode_scalar(v, f"{where}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows, dtype=complex).reshape(len(x), width)


def encode_scalar(z):
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(M):
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return [[encode_scalar(v) for v in row] for row in M]


def encode_vector(v):
    return [encode_scalar(z) for z in np.ravel(v)]


def encode_real(x):
    """Finite floats as-is; non-finite values become ``null``."""
    x = float(x)
    return x if np.isfinite(x) else None


def dumps(obj):
    """Deterministic JSON: sorted keys, shortest round-trip float repr."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


# --- problem config --------------------------------------------------------


@dataclass(frozen=True)
class OmegaGrid:
    """Logarithmic grid ``logspace(start, stop, num)`` (decades)."""

    start: float = -2.0
    stop: float = 2.0
    num: int = 400

    def values(self):
        return np.logspace(self.start, self.stop, self.num)


@dataclass(frozen=True)
class AnalysisConfig:
    deltas: tuple = (0.0, 1.0)
    omega: OmegaGrid = field(default_factory=OmegaGrid)
    channel: int = 0


@dataclass(frozen=True, eq=False)
class ProblemConfig:
    plant: QuantumPlant
    homodyne: HomodyneConfig
    uncertainty: UncertaintyModel = None
    synthesis: SynthesisParams = None
    variant: str = "reference"
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    source: str = "<config>"

    @property
    def S(self):
        return build_homodyne_matrix(self.homodyne)


def _section(d, key, where, required=True):
    if key not in d:
        if required:
            raise ConfigError(f"{where}: missing required key '{key}'")
        return None
    v = d[key]
    if not isinstance(v, dict):
        raise ConfigError(f"{where}.{key}: expected an object")
    return v


def _check_keys(d, allowed, where):
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(extra)}")


def _parse_plant(d, where):
    kind = d.get("kind")
    if kind == "squeezer":
        _check_keys(d, {"kind", "beta", "kappa", "chi", "L"}, where)
        for k in ("beta", "kappa", "chi", "L"):
            if k not in d:
                raise ConfigError(f"{where}: missing required key '{k}'")
        beta = decode_real(d["beta"], f"{where}.beta", positive=True)
        kappa = decode_real(d["kappa"], f"{where}.kappa", positive=True)
        chi = decode_scalar(d["chi"], f"{where}.chi")
        chi = chi.real if chi.imag == 0 else chi
        L = decode_matrix(d["L"], f"{where}.L")
        return make_squeezer(beta, kappa, chi, L)
    if kind == "raw":
        _check_keys(d, {"kind", "A", "B", "C", "D", "L"}, where)
        mats = {}
        for k in "ABCDL":
            if k not in d:
                raise ConfigError(f"{where}: missing required key '{k}'")
            mats[k] = decode_matrix(d[k], f"{where}.{k}")
        return QuantumPlant(**mats)
    raise ConfigError(f"{where}.kind: expected 'squeezer' or 'raw', got {json.dumps(kind)}")


def _parse_factor(d, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    if "diag_powers" in d:
        _check_keys(d, {"diag_powers"}, where)
        ks = d["diag_powers"]
        if not isinstance(ks, list) or not all(isinstance(k, int) and not isinstance(k, bool) for k in ks):
            raise ConfigError(f"{where}.diag_powers: expected a list of integers")
        return DiagonalPowers(tuple(ks))
    if "constant" in d:
        _check_keys(d, {"constant", "scaled"}, where)
        scaled = d.get("scaled", False)
        if not isinstance(scaled, bool):
            raise ConfigError(f"{where}.scaled: expected true or false")
        return ConstantFactor(decode_matrix(d["constant"], f"{where}.constant"), scaled=scaled)
    raise ConfigError(f"{where}: expected 'diag_powers' or 'constant'")


def _parse_uncertainty(d, plant_d, where):
    kind = d.get("kind", "raw")
    if kind in ("squeezer-kappa", "squeezer-chi"):
        _check_keys(d, {"kind", "mu"}, where)
        if plant_d.get("kind") != "squeezer":
            raise ConfigError(f"{where}.kind: '{kind}' requires a squeezer plant")
        mu = decode_real(d.get("mu"), f"{where}.mu")
        if kind == "squeezer-kappa":
            return kappa_uncertainty(mu, float(plant_d["kappa"]))
        chi = decode_scalar(plant_d["chi"], "$.plant.chi")
        return chi_uncertainty(mu, chi.real if chi.imag == 0 else chi)
    if kind != "raw":
        raise ConfigError(f"{where}.kind: expected 'raw', 'squeezer-kappa' or 'squeezer-chi'")
    _check_keys(d, {"kind", "H1", "H2", "H3", "E", "G", "F1", "F2", "mu"}, where)
    mats = {}
    for k in ("H1", "H2", "H3", "E", "G"):
        if k not in d:
            raise ConfigError(f"{where}: missing required key '{k}'")
        mats[k] = decode_matrix(d[k], f"{where}.{k}")
    for k in ("F1", "F2"):
        if k not in d:
            raise ConfigError(f"{where}: missing required key '{k}'")
    mu = decode_real(d["mu"], f"{where}.mu") if "mu" in d else None
    return UncertaintyModel(
        F1=_parse_factor(d["F1"], f"{where}.F1"),
        F2=_parse_factor(d["F2"], f"{where}.F2"),
        mu=mu,
        meta={"kind": "raw"},
        **mats,
    )


def _parse_analysis(d, where):
    if d is None:
        return AnalysisConfig()
    _check_keys(d, {"deltas", "omega", "channel"}, where)
    deltas = d.get("deltas", [0.0, 1.0])
    if not isinstance(deltas, list) or not deltas:
        raise ConfigError(f"{where}.deltas: expected a non-empty list")
    deltas = tuple(decode_real(x, f"{where}.deltas[{i}]") for i, x in enumerate(deltas))
    for i, x in enumerate(deltas):
        if abs(x) > 1:
            raise ConfigError(f"{where}.deltas[{i}]: |delta| must not exceed 1")
    om = d.get("omega", {})
    if not isinstance(om, dict):
        raise ConfigError(f"{where}.omega: expected an object")
    _check_keys(om, {"start", "stop", "num"}, f"{where}.omega")
    start = decode_real(om.get("start", -2.0), f"{where}.omega.start")
    stop = decode_real(om.get("stop", 2.0), f"{where}.omega.stop")
    num = om.get("num", 400)
    if not isinstance(num, int) or isinstance(num, bool) or num < 1:
        raise ConfigError(f"{where}.omega.num: expected a positive integer")
    channel = d.get("channel", 0)
    if not isinstance(channel, int) or isinstance(channel, bool) or channel < 0:
        raise ConfigError(f"{where}.channel: expected a non-negative integer")
    return AnalysisConfig(deltas=deltas, omega=OmegaGrid(start, stop, num), channel=channel)


def parse_config(d, source="<config>"):
    """Validate a decoded JSON object and build a :class:`ProblemConfig`."""
    if not isinstance(d, dict):
        raise ConfigError("$: expected a JSON object at top level")
    _check_keys(d, {"plant", "homodyne", "uncertainty", "synthesis", "analysis", "comment"}, "$")
    plant_d = _section(d, "plant", "$")
    try:
        plant = _parse_plant(plant_d, "$.plant")
    except InputError as exc:
        raise ConfigError(f"$.plant: {exc}") from exc

    hom = _section(d, "homodyne", "$")
    _check_keys(hom, {"thetas_degrees"}, "$.homodyne")
    th = hom.get("thetas_degrees")
    if not isinstance(th, list):
        raise ConfigError("$.homodyne.thetas_degrees: expected a list of angles")
    th = [decode_real(x, f"$.homodyne.thetas_degrees[{i}]") for i, x in enumerate(th)]
    if len(th) != plant.m:
        raise ConfigError(f"$.homodyne.thetas_degrees: expected {plant.m} angle(s), got {len(th)}")
    homodyne = HomodyneConfig.from_degrees(th)

    unc = None
    ud = _section(d, "uncertainty", "$", required=False)
    if ud is not None:
        try:
            unc = _parse_uncertainty(ud, plant_d, "$.uncertainty")
            unc.validate_for(plant)
        except InputError as exc:
            raise ConfigError(f"$.uncertainty: {exc}") from exc

    synth, variant = None, "reference"
    sd = _section(d, "synthesis", "$", required=False)
    if sd is not None:
        _check_keys(sd, {"gamma", "eps1", "eps2", "variant"}, "$.synthesis")
        vals = {}
        for k in ("gamma", "eps1", "eps2"):
            if k not in sd:
                raise ConfigError(f"$.synthesis: missing required key '{k}'")
            vals[k] = decode_real(sd[k], f"$.synthesis.{k}", positive=True)
        synth = SynthesisParams(**vals)
        variant = sd.get("variant", "reference")
        if variant not in VARIANTS:
            raise ConfigError(f"$.synthesis.variant: expected one of {', '.join(VARIANTS)}")
        variant = canonical_variant(variant)

    analysis = _parse_analysis(_section(d, "analysis", "$", required=False), "$.analysis")
    if analysis.channel >= 2 * plant.m:
        raise ConfigError(f"$.analysis.channel: {analysis.channel} out of range for {2 * plant.m} inputs")
    return ProblemConfig(
        plant=plant, homodyne=homodyne, uncertainty=unc, synthesis=synth,
        variant=variant, analysis=analysis, source=source,
    )


def loads_config(text, source="<config>"):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    return parse_config(d, source)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    return loads_config(text, str(path))


def bundled_config(name):
    """Path of a bundled example config (``example1`` or ``example2``)."""
    path = Path(__file__).parent / "data" / f"{name}.json"
    if not path.exists():
        raise ConfigError(f"no bundled config named '{name}'")
    return path
