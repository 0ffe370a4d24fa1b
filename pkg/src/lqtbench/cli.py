"""Benchmark command line: one subcommand per reported artifact.

Markdown goes to stdout; ``--out DIR`` additionally writes JSON-lines and
CSV files.  Every run is deterministic (there is no randomness anywhere;
``--seedless`` documents that and is accepted as a no-op).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench
from .metrics import DEFAULT_DIVERGENCE_THRESHOLD
from .model import parse_config
from .solvers import FORWARD, MPC, OPTIMAL


def _float_list(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text: str) -> list:
    return [int(x) for x in text.split(",") if x.strip()]


def _write(out_dir, stem: str, report):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.jsonl").write_text(report.to_jsonl())
    if hasattr(report, "to_csv"):
        (out / f"{stem}.csv").write_text(report.to_csv())
    (out / f"{stem}.md").write_text(report.to_markdown())


def _add_common(p: argparse.ArgumentParser, dt_help: str):
    p.add_argument("--dt", type=float, default=None, help=dt_help)
    p.add_argument("--out", type=str, default=None, help="output directory for JSONL/CSV/MD files")
    p.add_argument("--f", type=float, default=bench.DEFAULT_FREQUENCY, help="signal frequency in Hz")
    p.add_argument(
        "--threshold", type=float, default=DEFAULT_DIVERGENCE_THRESHOLD,
        help="average-cost level reported as divergent ('*')",
    )
    p.add_argument(
        "--seedless", action="store_true",
        help="document that the run uses no randomness (always true; no-op)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lqtbench",
        description="Linear quadratic tracking benchmark: exact, forward sign-flip, and receding-horizon solvers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p1 = sub.add_parser("table1", help="exact vs forward average-cost grid")
    _add_common(p1, "grid step; default: per-horizon refined grid (see README)")

    p3 = sub.add_parser("table3", help="receding-horizon average-cost grid")
    _add_common(p3, "grid step; default: min(T/100000, 2.5e-3) per horizon")
    p3.add_argument("--w", type=int, default=2, help="lookahead window size in grid points")

    p4 = sub.add_parser("table4", help="timing comparison: receding horizon vs forward")
    _add_common(p4, "grid step; default: min(T/100000, 2.5e-3)")
    p4.add_argument("--T", type=float, default=250.0, help="horizon in seconds")
    p4.add_argument("--signal", type=str, default="z1", choices=("z1", "z2", "z3"))
    p4.add_argument("--R", type=_float_list, default=[8e-4, 0.01, 1.0],
                    help="comma-separated control weights, zipped with --w")
    p4.add_argument("--w", type=_int_list, default=[17, 85, 975],
                    help="comma-separated window sizes, zipped with --R")
    p4.add_argument("--repeats", type=int, default=3,
                    help="timing repeats per solver (median reported)")

    ps = sub.add_parser("stability", help="gain-equation forward-integration demo")
    ps.add_argument("--dt", type=float, default=0.01)
    ps.add_argument("--seedless", action="store_true", help="no-op; runs are deterministic")

    pt = sub.add_parser("trajectory", help="dump exact and forward trajectories as CSV")
    _add_common(pt, "grid step; default: per-horizon refined grid")
    pt.add_argument("--T", type=float, default=250.0)
    pt.add_argument("--R", type=float, default=0.01)
    pt.add_argument("--signal", type=str, default="z1", choices=("z1", "z2", "z3"))

    pg = sub.add_parser("grid", help="run a custom grid from a key=value config file")
    _add_common(pg, "grid step override (config 'dt' used otherwise, default 0.01)")
    pg.add_argument("--config", type=str, required=True, help="path to key = value config file")
    pg.add_argument("--w", type=_int_list, default=None,
                    help="window sizes; adds the receding-horizon solver")

    return parser


def _cmd_table1(args) -> int:
    report = bench.run_table1(dt=args.dt, f=args.f, divergence_threshold=args.threshold)
    sys.stdout.write(report.to_markdown())
    if args.out:
        _write(args.out, "table1", report)
    return 0


def _cmd_table3(args) -> int:
    grid = bench.ExperimentGrid(
        f=args.f, dt=args.dt, solvers=(MPC,), mpc_windows=(args.w,),
        divergence_threshold=args.threshold,
    )
    report = bench.run_grid(grid)
    sys.stdout.write(report.to_markdown())
    if args.out:
        _write(args.out, "table3", report)
    return 0


def _cmd_table4(args) -> int:
    if len(args.R) != len(args.w):
        raise SystemExit("--R and --w must have the same number of entries")
    report = bench.run_timing(
        horizon=args.T, signal=args.signal, pairs=tuple(zip(args.R, args.w)),
        dt=args.dt, f=args.f, repeats=args.repeats,
    )
    sys.stdout.write(report.to_markdown())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table4.jsonl").write_text(report.to_jsonl())
        (out / "table4.md").write_text(report.to_markdown())
    return 0


def _cmd_stability(args) -> int:
    report = bench.run_stability_demo(dt=args.dt)
    for line in report.lines():
        sys.stdout.write(line + "\n")
    return 0


def _cmd_trajectory(args) -> int:
    out = args.out or "."
    paths = bench.dump_trajectories(
        horizon=args.T, r=args.R, signal=args.signal, out_dir=out, dt=args.dt, f=args.f
    )
    for p in paths:
        sys.stdout.write(f"{p}\n")
    return 0


def _cmd_grid(args) -> int:
    raw = parse_config(Path(args.config).read_text())
    horizons = tuple(_float_list(raw.get("T", "25")))
    r_values = tuple(_float_list(raw.get("R", "1")))
    signals = tuple(s.strip() for s in raw.get("signal", "z1").split(","))
    windows = tuple(args.w) if args.w else tuple(_int_list(raw.get("w", "")))
    solvers = (OPTIMAL, FORWARD) + ((MPC,) if windows else ())
    dt = args.dt if args.dt is not None else (
        float(raw["dt"]) if "dt" in raw else 0.01
    )
    grid = bench.ExperimentGrid(
        horizons=horizons,
        r_values=r_values,
        signals=signals,
        f=args.f if args.f != bench.DEFAULT_FREQUENCY else float(raw.get("f", args.f)),
        solvers=solvers,
        mpc_windows=windows,
        dt=dt,
        a=float(raw.get("A", 1.0)),
        b=float(raw.get("B", 1.0)),
        q=float(raw.get("Q", 1.0)),
        x0=float(raw.get("x0", 2.0)),
        divergence_threshold=args.threshold,
    )
    report = bench.run_grid(grid)
    sys.stdout.write(report.to_markdown())
    if args.out:
        _write(args.out, "grid", report)
    return 0


_COMMANDS = {
    "table1": _cmd_table1,
    "table3": _cmd_table3,
    "table4": _cmd_table4,
    "stability": _cmd_stability,
    "trajectory": _cmd_trajectory,
    "grid": _cmd_grid,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
