"""Command-line front end.

Exit codes: 0 success, 1 no plan / validation failure, 2 bad input files or arguments.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import CONFIG_ENV, ConfigError, default_config_path, load_config
from .experiments import convergence_sweep, run_trials, trend_flags
from .plan_io import PlanFormatError, read_plan, write_plan, write_trajectory_csv
from .planner import hyrrt
from .system_model import check_clearance, check_motion_plan, inflate

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


def _config(path):
    return load_config(path if path is not None else default_config_path())


def _error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INPUT


def cmd_plan(args) -> int:
    try:
        cfg = _config(args.config)
    except ConfigError as exc:
        return _error(str(exc))
    planner = cfg.planner if args.seed is None else replace(cfg.planner, seed=args.seed)
    problem = cfg.build_problem()
    result = hyrrt(problem, cfg.library, planner)
    wall_ms = 1e3 * result.wall_time
    print(
        f"outcome={result.outcome.value} seed={planner.seed} iterations={result.iterations} "
        f"vertices={result.n_vertices} wall_ms={wall_ms:.1f}"
    )
    if result.plan is None:
        return EXIT_FAIL
    out = Path(args.out) if args.out else cfg.output_path("plan", "plan.json")
    meta = {"seed": planner.seed, "iterations": result.iterations, "vertices": result.n_vertices, "wall_ms": wall_ms}
    write_plan(out, result.plan, problem.system.name, meta)
    print(f"plan written to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        pair, _ = read_plan(args.plan)
        cfg = _config(args.config)
    except (PlanFormatError, ConfigError) as exc:
        return _error(str(exc))
    if args.samples < 1:
        return _error("--samples must be at least 1")
    if args.delta is not None and not args.delta > 0:
        return _error("--delta must be positive")
    problem = cfg.build_problem()
    eps = cfg.planner.goal_tolerance if args.eps is None else args.eps
    report = check_motion_plan(problem, pair, eps, cfg.planner.validation_tol)
    print(report.summary())
    ok = report.valid
    if args.delta is not None:
        target = problem.with_system(inflate(problem.system, args.delta)) if args.inflate else problem
        clear = check_clearance(
            target, pair, args.delta, args.samples, np.random.default_rng(args.clearance_seed), eps=eps
        )
        label = "inflated" if args.inflate else "original"
        print(f"clearance delta={args.delta:g} ({label} system): {'true' if clear else 'false'}")
        ok = ok and clear
    return EXIT_OK if ok else EXIT_FAIL


def _read_seeds(path):
    text = Path(path).read_text()
    seeds = [int(tok) for tok in text.replace(",", " ").split()]
    if not seeds:
        raise ValueError("seed file is empty")
    return seeds


def cmd_montecarlo(args) -> int:
    try:
        cfg = _config(args.config)
    except ConfigError as exc:
        return _error(str(exc))
    if args.seeds is not None:
        try:
            seeds = _read_seeds(args.seeds)
        except (OSError, ValueError) as exc:
            return _error(f"--seeds: {exc}")
    else:
        if args.runs is None or args.runs < 1:
            return _error("--runs must be at least 1")
        seeds = list(range(cfg.planner.seed, cfg.planner.seed + args.runs))
    sweep_ks = None
    if args.sweep:
        try:
            sweep_ks = [int(k) for k in args.sweep.split(",")]
        except ValueError:
            return _error("--sweep expects comma-separated integers")
        if any(k < 1 for k in sweep_ks) or any(b <= a for a, b in zip(sweep_ks, sweep_ks[1:])):
            return _error("--sweep values must be positive and strictly increasing")

    problem = cfg.build_problem()
    report = run_trials(problem, cfg.library, cfg.planner, seeds, workers=args.workers)
    doc = report.to_dict()
    vs, ws = report.vertex_stats(), report.wall_time_stats()
    print(
        f"runs={report.n_runs} successes={report.successes} success_rate={report.success_rate:.3f} "
        f"mean_vertices={vs['mean']:.1f} median_wall_ms={ws['median_ms']:.1f}"
    )
    if sweep_ks:
        points = convergence_sweep(problem, cfg.library, cfg.planner, sweep_ks, len(seeds), args.workers)
        flags = trend_flags(points)
        doc["sweep"] = [
            {"max_iterations": p.max_iterations, "runs": p.runs, "successes": p.successes, "success_rate": p.success_rate}
            for p in points
        ]
        doc["sweep_trend"] = flags
        print("max_iterations  success_rate")
        for p in points:
            print(f"{p.max_iterations:>14}  {p.success_rate:.3f}")
    out_json = Path(args.out_json) if args.out_json else cfg.output_path("report", "report.json")
    out_csv = Path(args.out_csv) if args.out_csv else cfg.output_path("csv", "runs.csv")
    with open(out_json, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    report.write_csv(out_csv)
    print(f"report written to {out_json} and {out_csv}")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    try:
        pair, _ = read_plan(args.plan)
    except PlanFormatError as exc:
        return _error(str(exc))
    try:
        write_trajectory_csv(args.out_csv, pair)
    except OSError as exc:
        return _error(f"cannot write {args.out_csv}: {exc.strerror}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyrrt",
        description="Motion planning for hybrid dynamical systems.",
        epilog=f"When CONFIG is omitted, ${CONFIG_ENV} or the bundled bouncing-ball config is used.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="run the planner and write a plan file")
    p.add_argument("config", nargs="?")
    p.add_argument("--out", help="plan file path (default: output.plan from the config)")
    p.add_argument("--seed", type=int, help="override planner.seed")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("validate", help="check a plan file against a problem")
    p.add_argument("plan")
    p.add_argument("config", nargs="?")
    p.add_argument("--eps", type=float, help="goal tolerance (default: planner.goal_tolerance)")
    p.add_argument("--delta", type=float, help="also test clearance with this radius")
    p.add_argument("--samples", type=int, default=32, help="ball samples per plan sample for the clearance test")
    p.add_argument("--inflate", action="store_true", help="test clearance on the delta-inflated system")
    p.add_argument("--clearance-seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("montecarlo", help="batch of seeded planner runs")
    p.add_argument("config", nargs="?")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--runs", type=int)
    group.add_argument("--seeds", help="file of whitespace- or comma-separated seeds")
    p.add_argument("--sweep", help="comma-separated iteration budgets, e.g. 50,200,1000")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-json")
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("plot-data", help="flatten a plan file to CSV")
    p.add_argument("plan")
    p.add_argument("out_csv")
    p.set_defaults(func=cmd_plot_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
