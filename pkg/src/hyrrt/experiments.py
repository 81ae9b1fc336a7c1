"""Monte Carlo harness: batches of seeded planner runs, iteration-budget sweeps,
and a wall-time comparison against the breadth-first baseline."""

from __future__ import annotations

import csv
import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .input_library import InputLibrary
from .planner import PlannerConfig, forward_propagation_bfs, hyrrt
from .system_model import MotionPlanningProblem, check_motion_plan

CSV_COLUMNS = ("seed", "outcome", "iterations", "vertices", "wall_ms")


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    outcome: str
    iterations: int
    vertices: int
    wall_ms: float
    plan_valid: Optional[bool] = None

    @property
    def found(self) -> bool:
        return self.outcome == "plan-found"


@dataclass
class TrialBatchReport:
    records: list = field(default_factory=list)

    @property
    def n_runs(self) -> int:
        return len(self.records)

    @property
    def successes(self) -> int:
        return sum(r.found for r in self.records)

    @property
    def success_rate(self) -> float:
        return self.successes / self.n_runs if self.records else 0.0

    def vertex_stats(self) -> dict:
        v = [r.vertices for r in self.records]
        if not v:
            return {"mean": None, "min": None, "max": None}
        return {"mean": statistics.fmean(v), "min": min(v), "max": max(v)}

    def wall_time_stats(self) -> dict:
        w = [r.wall_ms for r in self.records]
        if not w:
            return {"mean_ms": None, "median_ms": None}
        return {"mean_ms": statistics.fmean(w), "median_ms": statistics.median(w)}

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "successes": self.successes,
            "success_rate": self.success_rate,
            "vertices": self.vertex_stats(),
            "wall_time": self.wall_time_stats(),
            "runs": [asdict(r) for r in self.records],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in self.records:
                writer.writerow([r.seed, r.outcome, r.iterations, r.vertices, f"{r.wall_ms:.3f}"])


def _one_trial(problem, library, config, seed):
    result = hyrrt(problem, library, replace(config, seed=int(seed)))
    valid = None
    if result.plan is not None:
        valid = check_motion_plan(problem, result.plan, config.goal_tolerance, config.validation_tol).valid
    record = TrialRecord(
        int(seed), result.outcome.value, result.iterations, result.n_vertices, 1e3 * result.wall_time, valid
    )
    return record, result.plan


def run_trials(
    problem: MotionPlanningProblem,
    library: InputLibrary,
    config: PlannerConfig,
    seeds: Sequence[int],
    workers: int = 1,
    on_plan: Optional[Callable] = None,
) -> TrialBatchReport:
    """One independent planner run per seed; ``on_plan(seed, plan)`` sees every returned plan.

    Each returned plan is re-checked against the motion-plan conditions and
    the verdict is stored on its record. With ``workers > 1`` the runs go to
    a process pool; records keep the order of ``seeds`` either way.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("seed list is empty")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_one_trial, problem, library, config, s) for s in seeds]
            outputs = [f.result() for f in futures]
    else:
        outputs = [_one_trial(problem, library, config, s) for s in seeds]
    report = TrialBatchReport()
    for record, plan in outputs:
        report.records.append(record)
        if plan is not None and on_plan is not None:
            on_plan(record.seed, plan)
    return report


@dataclass(frozen=True)
class SweepPoint:
    max_iterations: int
    runs: int
    successes: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.runs

    @property
    def std_error(self) -> float:
        p = self.success_rate
        return math.sqrt(max(p * (1 - p), 0.0) / self.runs)


def convergence_sweep(
    problem: MotionPlanningProblem,
    library: InputLibrary,
    base_config: PlannerConfig,
    k_values: Sequence[int],
    seeds_per_k: int,
    workers: int = 1,
    on_plan: Optional[Callable] = None,
) -> list[SweepPoint]:
    """Success rate per iteration budget, using seeds ``0 .. seeds_per_k - 1`` at every budget."""
    k_values = list(k_values)
    if not k_values:
        raise ValueError("k_values is empty")
    if any(b <= a for a, b in zip(k_values, k_values[1:])):
        raise ValueError("k_values must be strictly increasing")
    if seeds_per_k < 1:
        raise ValueError("seeds_per_k must be at least 1")
    points = []
    for k in k_values:
        report = run_trials(
            problem, library, replace(base_config, max_iterations=int(k)), range(seeds_per_k), workers, on_plan
        )
        points.append(SweepPoint(int(k), report.n_runs, report.successes))
    return points


def trend_flags(points: Sequence[SweepPoint], sigmas: float = 2.0) -> list[str]:
    """Label each consecutive pair ``"up"``, ``"flat"``, ``"noise"`` (a drop within
    ``sigmas`` combined standard errors) or ``"drop"``."""
    flags = []
    for a, b in zip(points, points[1:]):
        diff = b.success_rate - a.success_rate
        if diff > 0:
            flags.append("up")
        elif diff == 0:
            flags.append("flat")
        else:
            spread = math.hypot(a.std_error, b.std_error)
            flags.append("noise" if -diff <= sigmas * spread else "drop")
    return flags


@dataclass
class ComparisonReport:
    hyrrt: TrialBatchReport
    bfs: TrialBatchReport

    def to_dict(self) -> dict:
        return {"hyrrt": self.hyrrt.to_dict(), "bfs": self.bfs.to_dict()}


def run_bfs_trials(
    problem: MotionPlanningProblem,
    library: InputLibrary,
    config: PlannerConfig,
    seeds: Sequence[int],
    depth_budget: int,
    branch_budget: int,
    max_frontier: int,
    on_plan: Optional[Callable] = None,
) -> TrialBatchReport:
    report = TrialBatchReport()
    for seed in seeds:
        stats: dict = {}
        start = time.perf_counter()
        plan = forward_propagation_bfs(
            problem,
            library,
            depth_budget,
            branch_budget,
            config.goal_tolerance,
            np.random.default_rng(seed),
            config,
            max_frontier,
            stats,
        )
        wall = 1e3 * (time.perf_counter() - start)
        valid = None
        if plan is not None:
            valid = check_motion_plan(problem, plan, config.goal_tolerance, config.validation_tol).valid
            if on_plan is not None:
                on_plan(seed, plan)
        outcome = "plan-found" if plan is not None else "budget-exhausted"
        report.records.append(TrialRecord(int(seed), outcome, stats["layers"], stats["vertices"], wall, valid))
    return report


def compare_with_bfs(
    problem: MotionPlanningProblem,
    library: InputLibrary,
    config: PlannerConfig,
    seeds: Sequence[int],
    depth_budget: int = 40,
    branch_budget: int = 8,
    max_frontier: int = 64,
    on_plan: Optional[Callable] = None,
) -> ComparisonReport:
    """Run HyRRT and the breadth-first baseline on the same seeds."""
    return ComparisonReport(
        run_trials(problem, library, config, seeds, on_plan=on_plan),
        run_bfs_trials(problem, library, config, seeds, depth_budget, branch_budget, max_frontier, on_plan),
    )
