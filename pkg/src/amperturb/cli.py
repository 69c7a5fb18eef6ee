"""Command line: ``amperturb run <scenario-name|config-path> [options]``."""
from __future__ import annotations

import argparse
import sys

from .scenarios import (EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, NUMERICAL_ERRORS, SCENARIO_NAMES, ConfigError,
                        build_scenario, emit_report, run_scenario)


def _formats(text: str) -> tuple:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amperturb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a named scenario or a config file")
    run.add_argument("target", help=f"one of {', '.join(SCENARIO_NAMES)} or a path to a key = value file")
    run.add_argument("--n-cells", type=int, dest="n_cells")
    run.add_argument("--dt", type=float)
    run.add_argument("--lambda", type=float, dest="lam")
    run.add_argument("--tol", type=float)
    run.add_argument("--out", default=".")
    run.add_argument("--format", type=_formats, dest="formats")
    run.add_argument("--parallel", action="store_true", help="evaluate the lambda sweep concurrently")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    overrides = {"n_cells": args.n_cells, "dt": args.dt, "lam": args.lam, "tol": args.tol,
                 "formats": args.formats}
    try:
        scenario = build_scenario(args.target, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_scenario(scenario, parallel=args.parallel)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        norms = getattr(exc, "term_norms", None)
        print(f"numerical failure: {exc}", file=sys.stderr)
        if norms:
            print(f"term norms so far: {norms[:20]}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        written = emit_report(report, scenario.formats, args.out)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    failed = [k for k, v in report["checks"].items() if not v["passed"]]
    for p in written:
        print(p)
    print(f"{scenario.name}: {len(report['checks']) - len(failed)}/{len(report['checks'])} checks passed")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
