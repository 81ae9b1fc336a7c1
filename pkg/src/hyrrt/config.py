"""Run configuration files (YAML) with field-path error messages.

Example::

    schema_version: 1
    problem: bouncing-ball          # or {name: bouncing-ball, x0: [15, 0], ...}
    planner:
      p_n: 0.5
      max_iterations: 1000
      goal_tolerance: 0.2
      seed: 7
      integrator: {scheme: rk4, step: 0.001}
    library: {t_max: 0.1, flow_input_min: 0, flow_input_max: 5,
              jump_input_min: 0, jump_input_max: 5}
    inflation_delta: null
    output: {plan: plan.json, report: report.json, csv: runs.csv}
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .input_library import InputLibrary, build_library
from .planner import PlannerConfig
from .simulator import IntegratorConfig, PriorityRule, Scheme, ZeroCrossingConfig
from .system_model import MotionPlanningProblem, get_problem, inflate, PROBLEMS

SCHEMA_VERSION = 1
CONFIG_ENV = "HYRRT_CONFIG"
BUNDLED_CONFIG = Path(__file__).parent / "configs" / "bouncing_ball.yaml"


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class RunConfig:
    problem_name: str
    problem_args: dict
    planner: PlannerConfig
    library: InputLibrary
    inflation_delta: Optional[float] = None
    output: dict = field(default_factory=dict)
    source: Optional[Path] = None

    def build_problem(self) -> MotionPlanningProblem:
        problem = get_problem(self.problem_name, **self.problem_args)
        if self.inflation_delta:
            problem = problem.with_system(inflate(problem.system, self.inflation_delta))
        return problem

    def output_path(self, key: str, default: str) -> Path:
        return Path(self.output.get(key, default))


def default_config_path() -> Path:
    """``$HYRRT_CONFIG`` when set, else the bundled bouncing-ball configuration."""
    env = os.environ.get(CONFIG_ENV)
    return Path(env) if env else BUNDLED_CONFIG


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read ({exc.strerror})") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"not valid YAML ({exc})") from None
    cfg = parse_config(doc)
    cfg.source = path
    return cfg


_TOP_KEYS = {"schema_version", "problem", "planner", "library", "inflation_delta", "output"}
_PLANNER_KEYS = {
    "p_n", "p_d", "max_iterations", "goal_tolerance", "rule", "n_init_samples",
    "constraint_inflation_s", "seed", "input_retries", "trivial_steps", "validation_tol",
    "integrator", "zero_crossing",
}
_LIBRARY_KEYS = {"t_max", "flow_input_min", "flow_input_max", "jump_input_min", "jump_input_max"}


def _mapping(value, path) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(path, "expected a mapping")
    return value


def _reject_unknown(section: dict, allowed: set, path: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else str(key), "unknown key")


def _number(section, key, path, default=None, *, integer=False, lo=None, hi=None, lo_open=False, hi_open=False):
    where = f"{path}.{key}" if path else key
    value = section.get(key, default)
    if value is None:
        raise ConfigError(where, "required")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(where, f"expected an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if lo is not None and (value <= lo if lo_open else value < lo):
        raise ConfigError(where, f"must be {'>' if lo_open else '>='} {lo}, got {value}")
    if hi is not None and (value >= hi if hi_open else value > hi):
        raise ConfigError(where, f"must be {'<' if hi_open else '<='} {hi}, got {value}")
    return value


def parse_config(doc: Any) -> RunConfig:
    """Validate a parsed document and build the run configuration."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a mapping")
    _reject_unknown(doc, _TOP_KEYS, "")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")

    problem = doc.get("problem", "bouncing-ball")
    if isinstance(problem, str):
        name, args = problem, {}
    elif isinstance(problem, dict):
        args = dict(problem)
        name = args.pop("name", None)
        if not isinstance(name, str):
            raise ConfigError("problem.name", "required string")
    else:
        raise ConfigError("problem", "expected a name or a mapping")
    if name not in PROBLEMS:
        raise ConfigError("problem" if isinstance(problem, str) else "problem.name", f"unknown problem {name!r}")
    try:
        get_problem(name, **args)
    except TypeError as exc:
        raise ConfigError("problem", str(exc)) from None

    p = _mapping(doc.get("planner"), "planner")
    _reject_unknown(p, _PLANNER_KEYS, "planner")
    integ = _mapping(p.get("integrator"), "planner.integrator")
    _reject_unknown(integ, {"scheme", "step"}, "planner.integrator")
    scheme = integ.get("scheme", "rk4")
    if scheme not in {s.value for s in Scheme}:
        raise ConfigError("planner.integrator.scheme", f"expected one of {[s.value for s in Scheme]}, got {scheme!r}")
    step = _number(integ, "step", "planner.integrator", 1e-3, lo=0, lo_open=True)
    zc = _mapping(p.get("zero_crossing"), "planner.zero_crossing")
    _reject_unknown(zc, {"time_tolerance", "max_bisections", "value_tolerance"}, "planner.zero_crossing")
    time_tol = _number(zc, "time_tolerance", "planner.zero_crossing", 1e-6, lo=0, lo_open=True)
    if time_tol > step:
        raise ConfigError("planner.zero_crossing.time_tolerance", "must not exceed planner.integrator.step")
    rule = p.get("rule", 2)
    if rule not in (1, 2):
        raise ConfigError("planner.rule", f"expected 1 or 2, got {rule!r}")
    planner = PlannerConfig(
        p_n=_number(p, "p_n", "planner", 0.5, lo=0, hi=1, lo_open=True, hi_open=True),
        p_d=_number(p, "p_d", "planner", 0.5, lo=0, hi=1, lo_open=True, hi_open=True),
        max_iterations=_number(p, "max_iterations", "planner", 1000, integer=True, lo=1),
        goal_tolerance=_number(p, "goal_tolerance", "planner", 0.2, lo=0, lo_open=True),
        rule=PriorityRule(rule),
        n_init_samples=_number(p, "n_init_samples", "planner", 1, integer=True, lo=1),
        constraint_inflation_s=_number(p, "constraint_inflation_s", "planner", 0.0, lo=0),
        seed=_number(p, "seed", "planner", 0, integer=True, lo=0),
        input_retries=_number(p, "input_retries", "planner", 32, integer=True, lo=1),
        trivial_steps=_number(p, "trivial_steps", "planner", 10, integer=True, lo=0),
        validation_tol=_number(p, "validation_tol", "planner", 1e-6, lo=0, lo_open=True),
        integrator=IntegratorConfig(Scheme(scheme), step),
        zero_crossing=ZeroCrossingConfig(
            time_tol,
            _number(zc, "max_bisections", "planner.zero_crossing", 60, integer=True, lo=0),
            _number(zc, "value_tolerance", "planner.zero_crossing", 1e-10, lo=0, lo_open=True),
        ),
    )

    lib = _mapping(doc.get("library"), "library")
    _reject_unknown(lib, _LIBRARY_KEYS, "library")
    t_max = _number(lib, "t_max", "library", 0.1, lo=0, lo_open=True)
    bounds = {k: _number(lib, k, "library", d) for k, d in
              [("flow_input_min", 0.0), ("flow_input_max", 5.0), ("jump_input_min", 0.0), ("jump_input_max", 5.0)]}
    for kind in ("flow", "jump"):
        if bounds[f"{kind}_input_max"] <= bounds[f"{kind}_input_min"]:
            raise ConfigError(f"library.{kind}_input_max", f"must exceed library.{kind}_input_min")
    library = build_library(
        t_max,
        (bounds["flow_input_min"], bounds["flow_input_max"]),
        (bounds["jump_input_min"], bounds["jump_input_max"]),
    )

    delta = doc.get("inflation_delta")
    if delta is not None:
        delta = _number(doc, "inflation_delta", "", None, lo=0, lo_open=True)

    output = _mapping(doc.get("output"), "output")
    _reject_unknown(output, {"plan", "report", "csv"}, "output")
    for key, value in output.items():
        if not isinstance(value, str):
            raise ConfigError(f"output.{key}", "expected a path string")

    return RunConfig(name, args, planner, library, delta, dict(output))
