"""Command-line entry point: ``quantlearn {run,validate,delta,incidence,margin}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time

import numpy as np

from . import data as data_mod
from .analysis import estimate_margin, incidence_scaling, report_text
from .experiment import ConfigError, load_config, run_experiment
from .lattices import LogarithmicLattice, LookupLattice, RegularLattice, delta_info
from .validation import FAIL, run_validation_suite

EXIT_OK, EXIT_VIOLATION, EXIT_BAD_INPUT = 0, 1, 2


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
        if args.workers:
            config.workers = args.workers
        grid = run_experiment(config)
    except (ConfigError, data_mod.ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    sys.stdout.write(grid.to_text())
    print(f"wrote {config.output_dir}/{config.name}.csv")
    return EXIT_OK


def cmd_validate(args) -> int:
    start = time.time()
    results = run_validation_suite(corrupt=args.corrupt, inject_inapplicable=args.inject_inapplicable,
                                   instances=args.instances)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.status.upper():<12} {r.name:<{width}}  {r.detail}")
    print(f"({time.time() - start:.1f}s)")
    return EXIT_VIOLATION if any(r.status == FAIL for r in results) else EXIT_OK


def cmd_delta(args) -> int:
    try:
        if args.kind == "regular":
            scheme = RegularLattice(args.d, args.points, args.lo, args.hi)
        elif args.kind == "logarithmic":
            scheme = LogarithmicLattice(args.d, args.exponent_bits, args.mantissa_bits)
        else:
            scheme = LookupLattice(data_mod.load_table_csv(args.table), args.halo)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    info = delta_info(scheme, samples=args.samples, seed=args.seed)
    kind = "exact" if info.exact else f"estimate over {info.samples} samples"
    print(f"{scheme!r}")
    print(f"atoms   {scheme.size}")
    print(f"delta   {info.value!r} ({kind})")
    return EXIT_OK


def cmd_incidence(args) -> int:
    if args.d < 1 or any(n < 2 for n in args.points):
        print("error: need d >= 1 and every point count >= 2", file=sys.stderr)
        return EXIT_BAD_INPUT
    rep = incidence_scaling(args.d, args.points, trials=args.trials, seed=args.seed)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["points_per_dim", "m", "mean_count", "min_count", "max_count", "m^(1-1/d)"])
    for n in args.points:
        c = rep.counts[n]
        m = n ** args.d
        writer.writerow([n, m, f"{np.mean(c):.2f}", min(c), max(c), f"{m ** rep.theory:.2f}"])
    print(f"# slope {rep.slope:.4f} (theory {rep.theory:.4f})")
    return EXIT_OK


def cmd_margin(args) -> int:
    try:
        dataset = data_mod.load_dataset(args.dataset)
        dataset, _ = data_mod.normalize(dataset, args.normalize)
        est = estimate_margin(dataset, budget=args.budget)
    except (data_mod.ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    print(report_text(est))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quantlearn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment grid from a config file")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=0, help="override [run] workers")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="run the built-in bound and equivalence checks")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--corrupt", action="store_true",
                   help="shorten the integer grid by one point (the equivalence check must fail)")
    p.add_argument("--inject-inapplicable", action="store_true",
                   help="add a delta >= gamma case, reported as inapplicable")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("delta", help="error parameter of a scheme")
    p.add_argument("kind", choices=["regular", "logarithmic", "lookup"])
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--points", type=int, default=256)
    p.add_argument("--lo", type=float, default=-1.0)
    p.add_argument("--hi", type=float, default=1.0)
    p.add_argument("-e", "--exponent-bits", type=int, default=3)
    p.add_argument("-t", "--mantissa-bits", type=int, default=1)
    p.add_argument("--table")
    p.add_argument("--halo", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("incidence", help="separator/cell incidence counts on a regular grid")
    p.add_argument("d", type=int)
    p.add_argument("points", type=_int_list, help="comma-separated points per dimension")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_incidence)

    p = sub.add_parser("margin", help="estimate the margin of a dataset file")
    p.add_argument("dataset")
    p.add_argument("--normalize", default="none",
                   choices=["none", "scale_to_box", "unit_max_norm"])
    p.add_argument("--budget", type=int, default=20000)
    p.set_defaults(func=cmd_margin)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "delta" and args.kind == "lookup" and not args.table:
        parser.error("lookup needs --table")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
