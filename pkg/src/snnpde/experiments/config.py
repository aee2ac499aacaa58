"""Experiment configuration files (JSON) and their validation.

A config is a flat JSON object.  ``experiment`` picks one of
:data:`EXPERIMENTS`; every other key must be allowed for that experiment,
and its required keys must be present.  All problems are collected into one
:class:`ConfigValidation` whose ``errors`` map field name to message.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..activations import SCHEMES, ActivationKind
from ..errors import ConfigValidation

EXPERIMENTS = (
    "SpectrumDecay", "EigenvectorGallery", "L2VsFrequency", "TruncationRSL",
    "RegularizedSpectrum", "L2VsLambda", "PGDSpectralLoss", "NeumannComparison",
    "ScalingSweep", "VaryingCoeffComparison",
)

DEFAULT_SEEDS = tuple(range(20))

METHODS = {
    "SpectrumDecay": ("G0", "G1", "G2", "PINN", "DRM", "FEMsp"),
    "EigenvectorGallery": ("G0", "G1", "G2"),
    "L2VsFrequency": ("PINN", "DRM", "FEMsp"),
    "TruncationRSL": ("PINN", "DRM", "FEMsp"),
    "RegularizedSpectrum": ("PINN", "DRM", "FEMsp"),
    "L2VsLambda": ("PINN", "DRM", "FEMsp"),
    "PGDSpectralLoss": ("PINN", "DRM", "FEMsp"),
    "NeumannComparison": ("PINN-D", "PINN-N", "DRM-D", "DRM-N"),
    "ScalingSweep": ("PINN", "DRM"),
    "VaryingCoeffComparison": ("linear-PINN", "trainable-PINN"),
}

COMMON = {"experiment", "output", "seeds", "methods", "widths", "sampling", "grid_n"}

# experiment -> (required keys, optional keys) beyond COMMON
KEYS = {
    "SpectrumDecay": ({"methods", "widths", "power"}, {"floor", "window_lo"}),
    "EigenvectorGallery": ({"methods", "widths", "power"}, {"n_vectors"}),
    "L2VsFrequency": ({"methods", "widths", "frequencies", "power"},
                      {"solver", "lambdas", "phases", "assembly", "quad_points"}),
    "TruncationRSL": ({"methods", "widths", "frequencies", "power", "eps_grid"}, {"phases"}),
    "RegularizedSpectrum": ({"methods", "widths", "power", "lambdas"}, {"frequencies", "phases"}),
    "L2VsLambda": ({"methods", "widths", "frequencies", "power", "lambdas"},
                   {"phases", "lu"}),
    "PGDSpectralLoss": ({"methods", "widths", "frequencies", "power"},
                        {"iterations", "snapshot_every", "phases", "gamma_factor"}),
    "NeumannComparison": ({"methods", "widths", "frequencies", "power"},
                          {"lambdas", "phases", "lambda_per_kmax"}),
    "ScalingSweep": ({"methods", "widths", "frequencies", "scalings"},
                     {"activation", "solver", "lambdas", "phases", "assembly", "quad_points"}),
    "VaryingCoeffComparison": ({"methods", "widths", "scalings"},
                               {"epochs", "learning_rate", "boundary_weight", "n_samples",
                                "quad_points"}),
}

SOLVERS = ("kkt", "regularized", "truncated_svd", "pgd")
ASSEMBLY = ("exact", "riemann", "trapezoid", "gauss_legendre")
_SCALE_RE = re.compile(r"^\s*(\d*\.?\d*)\s*\*?\s*N\s*(?:/\s*(\d*\.?\d+))?\s*$")


def parse_scale(value, N):
    """Scaling ``S`` as a number or an expression in ``N`` such as ``"N/100"`` or ``"2N"``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    m = _SCALE_RE.match(str(value))
    if not m:
        raise ValueError(f"cannot parse scaling {value!r}")
    mult = float(m.group(1)) if m.group(1) else 1.0
    div = float(m.group(2)) if m.group(2) else 1.0
    return mult * N / div


def parse_lambda(value):
    """Boundary weight; the string ``"inf"`` selects the constrained solve."""
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"lambda must be a number or 'inf', got {value!r}")
    return float(value)


@dataclass
class ExperimentConfig:
    """Validated configuration; ``raw`` keeps the original mapping for echoing."""

    experiment: str
    raw: dict
    seeds: tuple = DEFAULT_SEEDS
    output: str = "results"
    options: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def powers(self):
        p = self.raw.get("power", 1)
        return [int(v) for v in (p if isinstance(p, list) else [p])]


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_list(errors, raw, key, pred, what, allow_empty=False):
    v = raw.get(key)
    if not isinstance(v, list):
        errors[key] = f"must be a list of {what}"
        return
    if not v and not allow_empty:
        errors[key] = "must not be empty"
        return
    bad = [x for x in v if not pred(x)]
    if bad:
        errors[key] = f"entries must be {what}; offending: {bad[:3]}"


def validate(raw):
    """Return an :class:`ExperimentConfig` or raise :class:`ConfigValidation`."""
    if not isinstance(raw, dict):
        raise ConfigValidation({"<root>": "config must be a JSON object"})
    errors = {}
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        errors["experiment"] = f"must be one of {', '.join(EXPERIMENTS)}"
        raise ConfigValidation(errors)
    required, optional = KEYS[exp]
    allowed = COMMON | required | optional
    for k in sorted(set(raw) - allowed):
        errors[k] = "unknown key for " + exp
    for k in sorted(required - set(raw)):
        errors[k] = "required for " + exp

    if "methods" in raw:
        _check_list(errors, raw, "methods", lambda m: m in METHODS[exp],
                    "one of " + ", ".join(METHODS[exp]))
    if "widths" in raw:
        _check_list(errors, raw, "widths", lambda n: _is_int(n) and n >= 2, "integers >= 2")
    if "frequencies" in raw:
        _check_list(errors, raw, "frequencies", lambda k: _is_num(k) and k > 0, "positive numbers")
    if "seeds" in raw:
        _check_list(errors, raw, "seeds", lambda s: _is_int(s) and s >= 0, "nonnegative integers")
    if "power" in raw:
        p = raw["power"]
        ps = p if isinstance(p, list) else [p]
        if not ps or not all(_is_int(v) and 1 <= v <= 4 for v in ps):
            errors["power"] = "must be an integer in 1..4 or a nonempty list of them"
    if "lambdas" in raw:
        def ok(v):
            try:
                return parse_lambda(v) >= 0
            except ValueError:
                return False
        _check_list(errors, raw, "lambdas", ok, "nonnegative numbers or 'inf'")
    if "scalings" in raw:
        def ok_s(v):
            try:
                return parse_scale(v, 1.0) > 0
            except ValueError:
                return False
        _check_list(errors, raw, "scalings", ok_s, "positive numbers or expressions like 'N/100'")
    if "eps_grid" in raw:
        _check_list(errors, raw, "eps_grid", lambda e: _is_num(e) and 0 < e < 1, "numbers in (0, 1)")
    if "phases" in raw:
        ph = raw["phases"]
        if not (isinstance(ph, list) and len(ph) == 2 and all(_is_num(v) for v in ph)):
            errors["phases"] = "must be [low_phase, high_phase] in radians"
    if "sampling" in raw and raw["sampling"] not in SCHEMES:
        errors["sampling"] = f"must be one of {', '.join(SCHEMES)}"
    if "solver" in raw and raw["solver"] not in SOLVERS:
        errors["solver"] = f"must be one of {', '.join(SOLVERS)}"
    if "assembly" in raw and raw["assembly"] not in ASSEMBLY:
        errors["assembly"] = f"must be one of {', '.join(ASSEMBLY)}"
    if "activation" in raw:
        try:
            ActivationKind.parse(str(raw["activation"]))
        except (ValueError, TypeError):
            errors["activation"] = "unknown activation"
    if "output" in raw and not isinstance(raw["output"], str):
        errors["output"] = "must be a path string"
    for key in ("grid_n", "n_vectors", "iterations", "snapshot_every", "epochs",
                "n_samples", "quad_points", "window_lo"):
        if key in raw and not (_is_int(raw[key]) and raw[key] >= 1):
            errors[key] = "must be a positive integer"
    if "grid_n" in raw and _is_int(raw["grid_n"]) and raw["grid_n"] < 2:
        errors["grid_n"] = "must be at least 2"
    for key in ("learning_rate", "boundary_weight", "gamma_factor", "floor", "lambda_per_kmax"):
        if key in raw and not (_is_num(raw[key]) and raw[key] > 0):
            errors[key] = "must be a positive number"
    if "lu" in raw and not isinstance(raw["lu"], bool):
        errors["lu"] = "must be true or false"
    if raw.get("solver") == "regularized" and "lambdas" not in raw:
        errors["lambdas"] = "required when solver is 'regularized'"
    if exp in ("L2VsFrequency", "TruncationRSL", "RegularizedSpectrum", "L2VsLambda",
               "PGDSpectralLoss", "NeumannComparison") and "power" in raw and "methods" in raw \
            and "power" not in errors and "methods" not in errors:
        ps = raw["power"] if isinstance(raw["power"], list) else [raw["power"]]
        if any(m.startswith("PINN") for m in raw["methods"]) and min(ps) < 2:
            errors["power"] = "PINN needs ReLU power >= 2"
    if errors:
        raise ConfigValidation(errors)
    return ExperimentConfig(exp, dict(raw), tuple(raw.get("seeds", DEFAULT_SEEDS)),
                            raw.get("output", "results"))


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigValidation({"<file>": f"cannot read {path}: {exc.strerror}"}) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigValidation({"<file>": f"invalid JSON: {exc}"}) from exc
    return validate(raw)
