"""Command line entry point ``snnpde``.

    snnpde run <config.json> [--out DIR] [--workers K] [--seed-offset M]
    snnpde list-experiments
    snnpde validate <config.json>

Exit codes: 0 success, 2 config error, 3 numerical failure in at least one
cell (the partial outputs are still written).
"""
from __future__ import annotations

import argparse
import os
import sys

from ..errors import ConfigValidation
from .config import EXPERIMENTS, load_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

DESCRIPTIONS = {
    "SpectrumDecay": "eigenvalues of Gram/KKT matrices and fitted decay slopes",
    "EigenvectorGallery": "dominant frequency of the leading Gram eigenvectors",
    "L2VsFrequency": "relative L2 error of constrained solves against k_max",
    "TruncationRSL": "spectral loss as the truncated-SVD cut-off grows",
    "RegularizedSpectrum": "eigenvalues of G + lambda B'B",
    "L2VsLambda": "relative L2 error against the boundary weight",
    "PGDSpectralLoss": "spectral loss along projected gradient descent",
    "NeumannComparison": "Dirichlet versus Neumann data for PINN and DRM",
    "ScalingSweep": "sin-activation networks across weight scalings S",
    "VaryingCoeffComparison": "linear versus trainable PINN on the bump problem",
}


def _parser():
    ap = argparse.ArgumentParser(prog="snnpde", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--out", default=None, help="output directory (default: config 'output')")
    run.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    run.add_argument("--seed-offset", type=int, default=0)
    sub.add_parser("list-experiments", help="list experiment types")
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    return ap


def _report_config_error(exc):
    print("config error:", file=sys.stderr)
    for key, msg in exc.errors.items():
        print(f"  {key}: {msg}", file=sys.stderr)


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "list-experiments":
        for name in EXPERIMENTS:
            print(f"{name:24s} {DESCRIPTIONS[name]}")
        return EXIT_OK
    try:
        cfg = load_config(args.config)
    except ConfigValidation as exc:
        _report_config_error(exc)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"{args.config}: valid {cfg.experiment} config")
        return EXIT_OK
    if args.workers < 1 or args.seed_offset < 0:
        print("config error:\n  --workers must be >= 1 and --seed-offset >= 0", file=sys.stderr)
        return EXIT_CONFIG
    from .runner import run_experiment
    records = run_experiment(cfg, args.out, workers=args.workers, seed_offset=args.seed_offset)
    failed = [r for r in records if r.error]
    out = args.out or cfg.output
    print(f"{cfg.experiment}: {len(records)} runs, {len(failed)} failed -> {out}")
    for r in failed[:10]:
        print(f"  cell {r.cell_index} seed {r.seed}: {r.error}", file=sys.stderr)
    return EXIT_NUMERICAL if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
