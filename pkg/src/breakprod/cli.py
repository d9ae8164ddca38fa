"""Command-line entry point: ``breakprod {solve,sweep,reproduce,compare}``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from .errors import BreakprodError


def _common(parser: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        parser.add_argument("--config", required=True, type=Path, help="key = value model file")
    parser.add_argument("--solver", choices=ex.SOLVERS, help="override the configured solver")
    parser.add_argument("--grid", type=int, help="number of uniform grid intervals (even)")
    parser.add_argument("--out", type=Path, help="output CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="breakprod", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one configuration")
    _common(p)
    p.add_argument("--full-grid", action="store_true",
                   help="also write the grid-resolution trajectory (<out>_grid.csv)")

    p = sub.add_parser("sweep", help="profit over a range of one parameter")
    _common(p)
    p.add_argument("--param", help="parameter to sweep (overrides the config sweep line)")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--step", type=float)

    p = sub.add_parser("reproduce", help="recompute a reference table and compare")
    p.add_argument("--table", type=int, choices=(2, 3, 4, 5), required=True)
    p.add_argument("--grid", type=int, default=ex.DEFAULT_INTERVALS)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("compare", help="paired trajectories of two configurations")
    p.add_argument("--config", required=True, type=Path, action="append",
                   help="give twice: configuration A, then B")
    p.add_argument("--solver", choices=ex.SOLVERS)
    p.add_argument("--grid", type=int)
    p.add_argument("--out", type=Path)
    return parser


def _configure(args, path: Path) -> ex.RunConfig:
    config = ex.load_config(path)
    changes = {}
    if args.solver:
        changes["solver"] = args.solver
    if args.grid:
        changes["grid"] = args.grid
    return replace(config, **changes) if changes else config


def _print_summary(summary: dict) -> None:
    for key, value in summary.items():
        print(f"{key},{value}")


def cmd_solve(args) -> int:
    config = _configure(args, args.config)
    if args.out:
        result, status = ex.run(config, args.out, full_grid=args.full_grid)
        print(f"wrote {args.out} and {ex.summary_path(args.out)}")
    else:
        result = ex.solve(config)
        status = 0 if result.ok else 1
        print("t,u,x,d")
        for row in zip(result.report.times, result.report.u, result.report.x, result.report.d):
            print(",".join(f"{v:.6f}" for v in row))
        print()
    _print_summary(result.summary())
    if status:
        print("run flagged: converged/feasible/dynamics check failed", file=sys.stderr)
    return status


def cmd_sweep(args) -> int:
    config = _configure(args, args.config)
    spec = config.sweep
    if args.param:
        missing = [n for n in ("start", "stop", "step") if getattr(args, n) is None]
        if missing:
            raise ex.ConfigError(f"--param needs --{', --'.join(missing)}")
        spec = ex.SweepSpec(args.param, args.start, args.stop, args.step)
    rows = ex.sweep(config, spec)
    if args.out:
        ex.write_sweep_csv(args.out, spec.param, rows)
        print(f"wrote {args.out}")
    else:
        print(f"{spec.param},profit")
        for row in rows:
            print(f"{row.value:.6f},{row.profit:.6f}")
    return 0 if all(row.ok for row in rows) else 1


def cmd_reproduce(args) -> int:
    start = time.perf_counter()
    checks, result = ex.reproduce_table(args.table, args.grid)
    elapsed = time.perf_counter() - start
    for check in checks:
        print(check.line())
    if args.out:
        if args.table == 5:
            ex.write_sweep_csv(args.out, "b1", result)
        else:
            ex.write_trajectory_csv(args.out, result.report)
        print(f"wrote {args.out}")
    failed = sum(not c.passed for c in checks)
    print(f"table {args.table}: {len(checks) - failed}/{len(checks)} checks passed in {elapsed:.2f} s")
    return 0 if failed == 0 else 1


def cmd_compare(args) -> int:
    if len(args.config) != 2:
        raise ex.ConfigError("compare needs exactly two --config files")
    config_a, config_b = (_configure(args, path) for path in args.config)
    rows, ok = ex.compare(config_a, config_b)
    if args.out:
        ex.write_compare_csv(args.out, rows)
        print(f"wrote {args.out}")
    else:
        ex.write_compare_csv(sys.stdout, rows)
    return 0 if ok else 1


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "reproduce": cmd_reproduce, "compare": cmd_compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (BreakprodError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
