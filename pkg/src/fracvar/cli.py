"""Command line entry point: ``fracvar run`` and ``fracvar estimate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings

from .estimators import estimate_hurst, estimate_theta_known_H, estimate_theta_unknown_H
from .exceptions import ConfigError, FracvarError, HurstRangeWarning
from .harness import ExperimentConfig, emit_report, run_experiment
from .paths import read_path_csv
from .problems import builtin_examples, get_example

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def parse_levels(text: str) -> tuple:
    """``"2..14"`` (inclusive range), ``"4,8,12"`` or a mix such as ``"2..4,8"``."""
    levels = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if ".." in part:
            lo, hi = part.split("..", 1)
            levels.extend(range(int(lo), int(hi) + 1))
        else:
            levels.append(int(part))
    return tuple(sorted(set(levels)))


def parse_floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracvar", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a convergence experiment and write box-plot statistics")
    run.add_argument("--example", default="linear2d", choices=sorted(builtin_examples()))
    run.add_argument("--hurst", default="0.35,0.5,0.7", help="comma separated Hurst indices")
    run.add_argument("--fine-level", type=int, default=16)
    run.add_argument("--levels", default="2..14", help="sub-levels, e.g. 2..14 or 4,8")
    run.add_argument("--realizations", type=int, default=100)
    run.add_argument("--seed", type=int, default=1)
    run.add_argument("--horizon", type=float, default=1.0)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--out", required=True)
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--raw", action="store_true", help="also dump per-realization samples")

    est = sub.add_parser("estimate", help="estimate H and theta from one trajectory CSV")
    est.add_argument("--input", required=True, help="CSV with header t,x1,...,xd")
    est.add_argument("--fields", required=True, choices=sorted(builtin_examples()))
    est.add_argument("--level", type=int, required=True)
    est.add_argument("--hurst", type=float, default=None, help="known Hurst index")
    return parser


def _cmd_run(args) -> int:
    try:
        cfg = ExperimentConfig(
            example=args.example,
            hursts=parse_floats(args.hurst),
            fine_level=args.fine_level,
            sub_levels=parse_levels(args.levels),
            realizations=args.realizations,
            master_seed=args.seed,
            horizon=args.horizon,
            n_jobs=args.jobs,
        )
        report = run_experiment(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"fracvar: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        for path in emit_report(report, args.out, args.format, args.raw):
            print(path)
    except OSError as exc:
        print(f"fracvar: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if report.failures:
        print(f"{len(report.failures)} estimator failures recorded", file=sys.stderr)
    return EXIT_OK


def _cmd_estimate(args) -> int:
    try:
        path = read_path_csv(args.input)
    except OSError as exc:
        print(f"fracvar: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FracvarError, ValueError) as exc:
        print(f"fracvar: cannot parse {args.input}: {exc}", file=sys.stderr)
        return EXIT_IO
    problem = get_example(args.fields)
    try:
        if path.dim != problem.fields.dim:
            raise ConfigError(f"trajectory has dim {path.dim}, fields {args.fields} expect {problem.fields.dim}")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", HurstRangeWarning)
            h = estimate_hurst(path, args.level)
        if args.hurst is None:
            theta = estimate_theta_unknown_H(path, problem.fields, problem.tests, args.level)
        else:
            theta = estimate_theta_known_H(path, problem.fields, problem.tests, args.hurst, args.level)
    except FracvarError as exc:
        print(f"fracvar: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    record = theta.to_record(args.hurst)
    record["h_hat"] = h.h_hat
    if caught:
        record["warning"] = str(caught[0].message)
    print(json.dumps(record))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_estimate(args)


if __name__ == "__main__":
    sys.exit(main())
