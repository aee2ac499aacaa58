"""Sweep execution, CSV/JSON output and long-format plot data.

A *cell* is one combination of method, power, width, frequency, lambda and
scaling; a *unit* is a cell paired with a seed.  Units run serially or in a
process pool and are merged by ``(cell index, seed position)`` so output
order never depends on completion order.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from .. import closed_form as cf
from ..activations import SIN, ActivationKind, SamplingSpec, sample_layer
from ..assembly import (DRM, PINN, QuadratureSpec, SineSolution, assemble_exact,
                        assemble_femsp, assemble_quadrature, assemble_varying)
from ..errors import SchemaMismatch, SnnPdeError, WindowBelowFloor
from ..nonlinear import TrainableSNN, TrainConfig, bump_problem, train_adam
from ..solvers import (PGDConfig, RegularizedSolveSpec, TruncatedSVDSpec, kkt_eigh,
                       solve_kkt_direct, solve_neumann, solve_pgd, solve_regularized,
                       solve_truncated_svd)
from ..spectral import (eig_sym, eigvec_dominant_frequency, fit_decay_slope,
                        fourier_coefficient)
from .config import ExperimentConfig, parse_lambda, parse_scale

KEY_COLUMNS = ("cell", "method", "power", "width", "k_max", "lam", "scale", "seed")

# experiment -> (per-row sub-key columns, metric columns, plotted metric)
COLUMNS = {
    "SpectrumDecay": (("index",), ("eigenvalue", "fit_slope", "fit_hi"), "eigenvalue"),
    "EigenvectorGallery": (("rank",), ("eigenvalue", "dominant_frequency"), "dominant_frequency"),
    "L2VsFrequency": ((), ("rel_l2", "interior_residual", "boundary_residual"), "rel_l2"),
    "TruncationRSL": (("eps", "zeta"), ("rsl", "rel_l2", "n_truncated"), "rsl"),
    "RegularizedSpectrum": (("index",), ("eigenvalue",), "eigenvalue"),
    "L2VsLambda": ((), ("rel_l2", "boundary_residual"), "rel_l2"),
    "PGDSpectralLoss": (("iteration", "zeta"), ("rsl", "rel_l2"), "rsl"),
    "NeumannComparison": ((), ("rel_l2", "rel_l2_mean_normalized"), "rel_l2_mean_normalized"),
    "ScalingSweep": ((), ("rel_l2",), "rel_l2"),
    "VaryingCoeffComparison": ((), ("rel_l2", "initial_loss", "final_loss"), "rel_l2"),
}

DEFAULT_PHASES = {
    "TruncationRSL": (4 * math.pi / 5, -3 * math.pi / 4),
    "PGDSpectralLoss": (0.0, 0.0),
    "NeumannComparison": (math.pi / 5, math.pi / 3),
}
STANDARD_PHASES = (3 * math.pi / 5, -2 * math.pi / 3)

NUMERICAL_ERRORS = (SnnPdeError, ArithmeticError, np.linalg.LinAlgError, FloatingPointError)


@dataclass
class RunRecord:
    """Result of one (cell, seed) unit; ``rows`` hold sub-keys and metrics."""

    experiment: str
    cell_index: int
    cell: dict
    seed: int
    rows: list = field(default_factory=list)
    error: str = ""
    wall_time: float = 0.0


# -- cells ---------------------------------------------------------------------


def _axis(cfg, key, parse=lambda v: v):
    vals = cfg.get(key)
    return [parse(v) for v in vals] if vals else [None]


def expand_cells(cfg):
    """Cartesian product of the sweep axes relevant to the experiment."""
    exp = cfg.experiment
    lam_axis = [None]
    if exp in ("RegularizedSpectrum", "L2VsLambda") or \
            (cfg.get("solver") == "regularized"):
        lam_axis = _axis(cfg, "lambdas", parse_lambda)
    elif exp == "NeumannComparison" and cfg.get("lambdas"):
        lam_axis = _axis(cfg, "lambdas", parse_lambda)
    powers = cfg.powers() if "power" in cfg.raw else [None]
    cells = []
    for m, p, N, k, lam, S in itertools.product(
            cfg.get("methods"), powers, cfg.get("widths"),
            _axis(cfg, "frequencies"), lam_axis, _axis(cfg, "scalings")):
        cells.append({"method": m, "power": p, "width": N, "k_max": k, "lam": lam,
                      "scale": None if S is None else parse_scale(S, N)})
    return cells


# -- shared helpers -------------------------------------------------------------


def _grid(cfg):
    n = cfg.get("grid_n", 3000)
    return np.linspace(-1.0, 1.0, n)


def _solution(cfg, k):
    lo, hi = cfg.get("phases", DEFAULT_PHASES.get(cfg.experiment, STANDARD_PHASES))
    return SineSolution.two_mode(k, lo, hi)


def _layer(cfg, cell, seed, default):
    scheme = cfg.get("sampling", default)
    S = cell["scale"] if cell["scale"] is not None else 1.0
    p = cell["power"] or 1
    return sample_layer(SamplingSpec(scheme, seed, S=S, p=p), cell["width"])


def _rel(v, u):
    return float(np.linalg.norm(v - u) / np.linalg.norm(u))


def _rsl_values(v, ue, x, zeta):
    ref = fourier_coefficient(ue, x, zeta)
    return float(abs(fourier_coefficient(v, x, zeta) - ref) / abs(ref) * 100.0)


def _poisson_system(cfg, cell, seed, sol, form_name=None):
    method = form_name or cell["method"]
    p, N = cell["power"], cell["width"]
    if method == "FEMsp":
        return assemble_femsp(N, p, sol.forcing, sol.dirichlet())
    form = PINN if method == "PINN" else DRM
    fallback = "sin" if cfg.experiment == "ScalingSweep" else f"relu{p or 1}"
    kind = ActivationKind.parse(cfg.get("activation", fallback))
    default = "scaled_uniform" if not kind.is_relu else "uniform_sign"
    layer = _layer(cfg, cell, seed, default)
    assembly = cfg.get("assembly", "exact" if kind.is_relu else "riemann")
    if assembly == "exact":
        if not kind.is_relu:
            raise ValueError("exact assembly needs a ReLU activation")
        return assemble_exact(layer, kind.power, form, sol.forcing, sol.dirichlet())
    quad = QuadratureSpec(assembly, cfg.get("quad_points", 10000))
    return assemble_quadrature(layer, kind, form, sol.forcing, sol.dirichlet(), quad)


def _solve(cfg, sys, lam):
    solver = cfg.get("solver", "kkt")
    if solver == "regularized" and lam is not None:
        return solve_regularized(sys, RegularizedSolveSpec(lam, "lu" if cfg.get("lu", True) else "cholesky"))
    if solver == "pgd":
        return solve_pgd(sys, PGDConfig(T_max=cfg.get("iterations", 10000)))
    return solve_kkt_direct(sys)


def _descending_abs(lam):
    return np.sort(np.abs(lam))[::-1]


# -- experiments ------------------------------------------------------------------


def _spectrum_decay(cfg, cell, seed):
    m, p, N = cell["method"], cell["power"], cell["width"]
    if m.startswith("G"):
        layer = _layer(cfg, cell, seed, "uniform_one")
        lam = eig_sym(cf.gram_matrix_relu(p, int(m[1]), layer.w, layer.shifts())).eigenvalues
    elif m == "FEMsp":
        sol = SineSolution.two_mode(1)
        lam = eig_sym(assemble_femsp(N, p, sol.forcing, sol.dirichlet()).G).eigenvalues
    else:
        layer = _layer(cfg, cell, seed, "knot_aligned")
        sol = SineSolution.two_mode(1)
        sys = assemble_exact(layer, p, PINN if m == "PINN" else DRM, sol.forcing, sol.dirichlet())
        lam = _descending_abs(eig_sym(sys.kkt()[0]).eigenvalues)
    floor = cfg.get("floor", 1e-12)
    lo = cfg.get("window_lo", 10)
    above = np.nonzero(lam > floor * lam[0])[0]
    hi = int(above[-1]) + 1 if above.size else 0
    try:
        slope = fit_decay_slope(lam, (lo, hi), floor) if hi > lo else float("nan")
    except WindowBelowFloor:
        slope = float("nan")
    return [{"index": i + 1, "eigenvalue": float(v), "fit_slope": slope, "fit_hi": hi}
            for i, v in enumerate(lam)]


def _eigenvector_gallery(cfg, cell, seed):
    from ..assembly import NetworkBasis
    p, k = cell["power"], int(cell["method"][1])
    layer = _layer(cfg, cell, seed, "uniform_one")
    rep = eig_sym(cf.gram_matrix_relu(p, k, layer.w, layer.shifts()), want_vectors=True)
    basis = NetworkBasis(layer, ActivationKind.relu_pow(p))
    x = _grid(cfg)
    n = min(cfg.get("n_vectors", 50), layer.N)
    return [{"rank": j + 1, "eigenvalue": float(rep.eigenvalues[j]),
             "dominant_frequency": eigvec_dominant_frequency(rep.eigenvectors[:, j], basis, x)}
            for j in range(n)]


def _l2_vs_frequency(cfg, cell, seed):
    sol = _solution(cfg, cell["k_max"])
    sys = _poisson_system(cfg, cell, seed, sol)
    out = _solve(cfg, sys, cell["lam"])
    x = _grid(cfg)
    return [{"rel_l2": _rel(sys.evaluate(out.a, x), sol(x)),
             "interior_residual": out.interior_residual,
             "boundary_residual": out.boundary_residual}]


def _truncation_rsl(cfg, cell, seed):
    sol = _solution(cfg, cell["k_max"])
    sys = _poisson_system(cfg, cell, seed, sol)
    eig = kkt_eigh(sys)
    x = _grid(cfg)
    ue = sol(x)
    rows = []
    for eps in cfg.get("eps_grid"):
        out = solve_truncated_svd(sys, TruncatedSVDSpec(eps), eig)
        v = sys.evaluate(out.a, x)
        rel = _rel(v, ue)
        for z in sol.frequencies:
            rows.append({"eps": eps, "zeta": z, "rsl": _rsl_values(v, ue, x, z),
                         "rel_l2": rel, "n_truncated": out.spectrum_used["n_truncated"]})
    return rows


def _regularized_spectrum(cfg, cell, seed):
    sol = _solution(cfg, cell["k_max"] or 1)
    sys = _poisson_system(cfg, cell, seed, sol)
    lam = cell["lam"]
    if math.isinf(lam):
        raise ValueError("the regularized spectrum needs a finite lambda")
    R = sys.G + lam * sys.B.T @ sys.B
    vals = eig_sym(0.5 * (R + R.T)).eigenvalues
    return [{"index": i + 1, "eigenvalue": float(v)} for i, v in enumerate(vals)]


def _l2_vs_lambda(cfg, cell, seed):
    sol = _solution(cfg, cell["k_max"])
    sys = _poisson_system(cfg, cell, seed, sol)
    lam = cell["lam"]
    method = "lu" if cfg.get("lu", True) else "cholesky"
    out = solve_regularized(sys, RegularizedSolveSpec(lam, method))
    x = _grid(cfg)
    return [{"rel_l2": _rel(sys.evaluate(out.a, x), sol(x)),
             "boundary_residual": out.boundary_residual}]


def _pgd_spectral_loss(cfg, cell, seed):
    sol = _solution(cfg, cell["k_max"])
    sys = _poisson_system(cfg, cell, seed, sol)
    pcfg = PGDConfig(T_max=cfg.get("iterations", 10000), init_seed=seed,
                     snapshot_every=cfg.get("snapshot_every", 100),
                     gamma_factor=cfg.get("gamma_factor", 1.99))
    out = solve_pgd(sys, pcfg)
    x = _grid(cfg)
    ue = sol(x)
    rows = []
    for it, a in out.snapshots:
        v = sys.evaluate(a, x)
        rel = _rel(v, ue)
        for z in sol.frequencies:
            rows.append({"iteration": it, "zeta": z, "rsl": _rsl_values(v, ue, x, z),
                         "rel_l2": rel})
    return rows


def _neumann_comparison(cfg, cell, seed):
    sol = _solution(cfg, cell["k_max"])
    form, bc = cell["method"].split("-")
    sys = _poisson_system(cfg, cell, seed, sol, form_name=form)
    lam = cell["lam"] if cell["lam"] is not None else cfg.get("lambda_per_kmax", 0.1) * cell["k_max"]
    if bc == "D":
        out = solve_kkt_direct(sys) if form == "DRM" else \
            solve_regularized(sys, RegularizedSolveSpec(lam, "lu"))
    else:
        dl, dr = sol.neumann()
        slope = sys.basis.features(np.array([-1.0, 1.0]), 1) if form == "PINN" else None
        spec = RegularizedSolveSpec(lam, "lu") if form == "PINN" else None
        out = solve_neumann(sys, spec=spec, dc_left=dl, dc_right=dr, slope_matrix=slope)
    x = _grid(cfg)
    v, ue = sys.evaluate(out.a, x), sol(x)
    return [{"rel_l2": _rel(v, ue),
             "rel_l2_mean_normalized": _rel(v - v.mean(), ue - ue.mean())}]


def _scaling_sweep(cfg, cell, seed):
    return [{"rel_l2": _l2_vs_frequency(cfg, cell, seed)[0]["rel_l2"]}]


def _varying_coeff(cfg, cell, seed):
    N, S = cell["width"], cell["scale"]
    problem = bump_problem()
    x = _grid(cfg)
    ue = problem.u_exact(x)
    if cell["method"] == "linear-PINN":
        layer = sample_layer(SamplingSpec("scaled_uniform", seed, S=S), N)
        quad = QuadratureSpec("gauss_legendre", cfg.get("quad_points", 20000), 10)
        sys = assemble_varying(layer, SIN, problem, PINN, quad)
        out = solve_kkt_direct(sys)
        return [{"rel_l2": _rel(sys.evaluate(out.a, x), ue),
                 "initial_loss": float("nan"), "final_loss": float("nan")}]
    tcfg = TrainConfig(epochs=cfg.get("epochs", 20000), learning_rate=cfg.get("learning_rate", 8e-4),
                       lam=cfg.get("boundary_weight", 250.0), n_samples=cfg.get("n_samples", 500),
                       seed=seed)
    net, hist = train_adam(TrainableSNN.initialize(N, S, seed), problem, tcfg)
    return [{"rel_l2": _rel(net(x), ue), "initial_loss": float(hist[0]),
             "final_loss": float(hist[-1])}]


RUNNERS = {
    "SpectrumDecay": _spectrum_decay,
    "EigenvectorGallery": _eigenvector_gallery,
    "L2VsFrequency": _l2_vs_frequency,
    "TruncationRSL": _truncation_rsl,
    "RegularizedSpectrum": _regularized_spectrum,
    "L2VsLambda": _l2_vs_lambda,
    "PGDSpectralLoss": _pgd_spectral_loss,
    "NeumannComparison": _neumann_comparison,
    "ScalingSweep": _scaling_sweep,
    "VaryingCoeffComparison": _varying_coeff,
}


def _run_unit(args):
    cfg, idx, cell, seed = args
    t0 = time.perf_counter()
    try:
        rows = RUNNERS[cfg.experiment](cfg, cell, seed)
        err = ""
    except NUMERICAL_ERRORS as exc:
        rows, err = [], f"{type(exc).__name__}: {exc}"
    except ValueError as exc:
        rows, err = [], f"{type(exc).__name__}: {exc}"
    return RunRecord(cfg.experiment, idx, cell, seed, rows, err, time.perf_counter() - t0)


# -- output ---------------------------------------------------------------------------


def fmt(v):
    """Serialize a cell value; floats keep 17 significant digits."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def raw_columns(experiment):
    sub, metrics, _ = COLUMNS[experiment]
    return list(KEY_COLUMNS) + list(sub) + list(metrics) + ["error"]


def agg_columns(experiment):
    sub, metrics, _ = COLUMNS[experiment]
    cols = [c for c in KEY_COLUMNS if c != "seed"] + list(sub) + ["n_seeds", "n_failed"]
    for m in metrics:
        cols += [f"{m}_mean", f"{m}_median"]
    return cols


def _key_values(rec):
    c = rec.cell
    return {"cell": rec.cell_index, "method": c["method"], "power": c["power"],
            "width": c["width"], "k_max": c["k_max"], "lam": c["lam"],
            "scale": c["scale"], "seed": rec.seed}


def raw_rows(records):
    exp = records[0].experiment
    sub, metrics, _ = COLUMNS[exp]
    for rec in records:
        keys = _key_values(rec)
        if rec.error:
            yield {**keys, **{c: None for c in sub}, **{m: float("nan") for m in metrics},
                   "error": rec.error}
            continue
        for row in rec.rows:
            yield {**keys, **{c: row[c] for c in sub}, **{m: row[m] for m in metrics},
                   "error": ""}


def aggregate(records):
    exp = records[0].experiment
    sub, metrics, _ = COLUMNS[exp]
    groups = {}
    failed = {}
    for rec in records:
        if rec.error:
            failed[rec.cell_index] = failed.get(rec.cell_index, 0) + 1
        for row in rec.rows:
            key = (rec.cell_index,) + tuple(row[c] for c in sub)
            groups.setdefault(key, (rec, []))[1].append(row)
    out = []
    for key in sorted(groups, key=lambda k: tuple((x is None, x) for x in k)):
        rec, rows = groups[key]
        kv = _key_values(rec)
        del kv["seed"]
        entry = {**kv, **{c: rows[0][c] for c in sub}, "n_seeds": len(rows),
                 "n_failed": failed.get(rec.cell_index, 0)}
        for m in metrics:
            vals = np.array([r[m] for r in rows], dtype=float)
            finite = vals[np.isfinite(vals)]
            entry[f"{m}_mean"] = float(finite.mean()) if finite.size else float("nan")
            entry[f"{m}_median"] = float(np.median(finite)) if finite.size else float("nan")
        out.append(entry)
    return out


def _csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def versions():
    return {"snnpde": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


# -- entry points ---------------------------------------------------------------------------


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers=1, seed_offset=0):
    """Run every (cell, seed) unit and write ``<experiment>_{raw,agg}.csv``
    and ``<experiment>_meta.json`` into ``out_dir`` (default ``cfg.output``).

    Returns the records, ordered by cell index then seed position.  Failed
    units carry an ``error`` message and leave NaN metrics in the raw file.
    """
    cells = expand_cells(cfg)
    seeds = [s + seed_offset for s in cfg.seeds]
    units = [(cfg, i, cell, s) for i, cell in enumerate(cells) for s in seeds]
    if workers and workers > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_unit, units, chunksize=1))
    else:
        records = [_run_unit(u) for u in units]
    order = {s: j for j, s in enumerate(seeds)}
    records.sort(key=lambda r: (r.cell_index, order[r.seed]))

    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    exp = cfg.experiment
    (out / f"{exp}_raw.csv").write_text(_csv_text(raw_columns(exp), raw_rows(records)))
    (out / f"{exp}_agg.csv").write_text(_csv_text(agg_columns(exp), aggregate(records)))
    meta = {
        "experiment": exp,
        "config": cfg.raw,
        "versions": versions(),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "workers": workers,
        "seed_offset": seed_offset,
        "n_cells": len(cells),
        "n_units": len(units),
        "n_failed": sum(1 for r in records if r.error),
        "raw_columns": raw_columns(exp),
        "agg_columns": agg_columns(exp),
        "wall_time": [{"cell": r.cell_index, "seed": r.seed, "seconds": round(r.wall_time, 6)}
                      for r in records],
    }
    (out / f"{exp}_meta.json").write_text(json.dumps(meta, indent=2, default=str) + "\n")
    return records


def emit_plot_data(records, experiment, path=None):
    """Long-format CSV, one observation of the experiment's plotted metric per row.

    Columns are the key columns, the experiment's sub-key columns and the
    metric (see ``COLUMNS``).  Failed units contribute no rows.
    """
    records = list(records)
    if not records:
        raise SchemaMismatch("no records to emit")
    if experiment not in COLUMNS:
        raise SchemaMismatch(f"unknown experiment {experiment!r}")
    kinds = {r.experiment for r in records}
    if kinds != {experiment}:
        raise SchemaMismatch(f"records mix experiments {sorted(kinds)}; expected {experiment}")
    sub, _, metric = COLUMNS[experiment]
    columns = list(KEY_COLUMNS) + list(sub) + [metric]
    rows = [{**_key_values(r), **row} for r in records if not r.error for row in r.rows]
    text = _csv_text(columns, rows)
    if path is not None:
        Path(path).write_text(text)
    return text
