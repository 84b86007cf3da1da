"""Command-line entry point.

    stackmc estimate --data samples.csv --dist 'uniform(-1,1)' --fitter 'poly(3)'
    stackmc sweep --fn rosenbrock --dist 'uniform(-3,3)^10' --n 50,200,1000 --out results/
    stackmc worked-example
    stackmc std --data samples.csv --dist 'beta(2,5)^8'

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from ..distributions import parse_distribution
from ..errors import (
    ConfigError,
    DegenerateWeightError,
    InsufficientDataError,
    NotAvailableError,
    NumericError,
    ParameterError,
    ParseError,
    ShapeError,
    UnsupportedIntegralError,
)
from ..estimators import DEFAULT_C_GUARD, DEFAULT_K, stackmc_estimate, stackmc_is_estimate
from ..fitters import parse_fitter
from .. import worked_example
from .io import emit_outputs, fmt, ingest_samples, write_report_csv
from .sweep import ExperimentConfig, estimate_std, run_sweep

log = logging.getLogger("stackmc")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
CONFIG_ERRORS = (
    ConfigError, ParseError, ParameterError, ShapeError, InsufficientDataError,
    UnsupportedIntegralError, NotAvailableError, OSError,
)
NUMERIC_ERRORS = (NumericError, DegenerateWeightError, FloatingPointError)


def _n_list(text):
    try:
        values = [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list of sample counts")
    return values


def _common(p):
    p.add_argument("--dist", required=True, help="input density, e.g. 'uniform(-3,3)^10'")
    p.add_argument("--fitter", default="poly(3)", help="surrogate: poly(n) or fourier(n)")
    p.add_argument("--k", type=int, default=DEFAULT_K, help="number of folds")
    p.add_argument("--c", type=float, default=DEFAULT_C_GUARD, dest="c_guard",
                   help="guard threshold in standard errors")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="stackmc", description="Stacked Monte Carlo integral estimation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="one dataset -> one StackMC report")
    p.add_argument("--data", required=True, help="CSV with columns x1..xD,f")
    _common(p)
    p.add_argument("--q", help="sampling density when the samples were importance sampled")
    p.add_argument("--csv", help="append the report as one CSV row to this file")

    p = sub.add_parser("sweep", help="repeated-trial MSE sweep over sample counts")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fn", help="test function: poly1d, poly1d_prose, rosenbrock, btbutterfly")
    src.add_argument("--data", help="CSV pool to subsample; its mean is used as the truth")
    _common(p)
    p.add_argument("--n", type=_n_list, required=True, help="comma-separated sample counts")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)

    sub.add_parser("worked-example", help="reproduce the 20-sample walkthrough and diff it")

    p = sub.add_parser("std", help="mean and standard deviation from two StackMC runs")
    p.add_argument("--data", required=True)
    _common(p)
    return parser


def _estimate(args):
    data = ingest_samples(args.data)
    dist = parse_distribution(args.dist)
    spec = parse_fitter(args.fitter, data.dims)
    if args.q:
        q = parse_distribution(args.q)
        rep = stackmc_is_estimate(data, dist, q, spec, args.k, args.c_guard, args.seed)
    else:
        rep = stackmc_estimate(data, dist, spec, args.k, args.c_guard, args.seed)
    sys.stdout.write(rep.to_text())
    if args.csv:
        write_report_csv(rep, args.csv)
    return 0


def _sweep(args):
    config = ExperimentConfig(
        dist=args.dist, fitter=args.fitter, fn=args.fn, data=args.data, k=args.k,
        c_guard=args.c_guard, n_values=tuple(args.n), trials=args.trials, seed=args.seed, out=args.out,
    )
    rows, summary = run_sweep(config, workers=args.workers)
    files = emit_outputs(rows, summary, args.out)
    print(f"{'n':>7} {'mse_mc':>12} {'mse_fit':>12} {'mse_smc':>12} {'guard':>6}")
    for s in summary:
        print(f"{s.n:>7} {s.mse_mc:>12.5g} {s.mse_fit:>12.5g} {s.mse_smc:>12.5g} {s.guard_rate:>6.3f}")
    for kind, path in files.items():
        log.info("wrote %s: %s", kind, path)
    return 0


def _worked(args):
    checks = worked_example.run()
    print(worked_example.format_checks(checks))
    failed = [c for c in checks if not c.ok]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 0 if not failed else EXIT_NUMERIC


def _std(args):
    data = ingest_samples(args.data)
    dist = parse_distribution(args.dist)
    spec = parse_fitter(args.fitter, data.dims)
    res = estimate_std(data, dist, spec, args.k, args.c_guard, args.seed)
    print(f"mean = {fmt(res.mean)}")
    print(f"std = {fmt(res.std)}")
    print(f"clipped = {fmt(res.clipped)}")
    return 0


COMMANDS = {"estimate": _estimate, "sweep": _sweep, "worked-example": _worked, "std": _std}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except NUMERIC_ERRORS as exc:
        print(f"stackmc: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CONFIG_ERRORS as exc:
        print(f"stackmc: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
