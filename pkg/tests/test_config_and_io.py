import csv
import json

import numpy as np
import pytest
import yaml

from hyrrt.config import BUNDLED_CONFIG, CONFIG_ENV, ConfigError, default_config_path, load_config, parse_config
from hyrrt.hybrid_time import SolutionPair
from hyrrt.plan_io import PlanFormatError, plan_from_dict, plan_to_dict, read_plan, write_plan, write_trajectory_csv
from hyrrt.simulator import PriorityRule, Scheme

from helpers import analytic_plan, simulate_random_pair


def base_doc():
    return yaml.safe_load(BUNDLED_CONFIG.read_text())


# -- configuration ----------------------------------------------------------

def test_bundled_config_loads():
    cfg = load_config(BUNDLED_CONFIG)
    assert cfg.problem_name == "bouncing-ball"
    assert cfg.planner.seed == 7 and cfg.planner.p_n == 0.5 and cfg.planner.goal_tolerance == 0.2
    assert cfg.planner.integrator.scheme is Scheme.RK4 and cfg.planner.integrator.step == 1e-3
    assert cfg.planner.rule is PriorityRule.FLOW
    assert cfg.library.t_max == 0.1
    assert cfg.inflation_delta is None
    assert str(cfg.output_path("plan", "x")) == "plan.json"


def test_minimal_config_uses_defaults():
    cfg = parse_config({"schema_version": 1})
    assert cfg.planner.max_iterations == 1000 and cfg.planner.p_d == 0.5
    assert cfg.problem_name == "bouncing-ball"


def test_inline_problem_and_inflation():
    cfg = parse_config({"schema_version": 1, "problem": {"name": "bouncing-ball", "xf": [9, 0]}, "inflation_delta": 0.1})
    problem = cfg.build_problem()
    assert problem.xf_distance(np.array([9.0, 0.0])) == 0.0
    assert problem.system.flow_membership(np.array([-0.05, 0.0]), np.array([1.0]))


@pytest.mark.parametrize(
    "patch, path",
    [
        ({"planner": {"p_n": 1.5}}, "planner.p_n"),
        ({"planner": {"max_iterations": 2.5}}, "planner.max_iterations"),
        ({"planner": {"integrator": {"step": -1}}}, "planner.integrator.step"),
        ({"planner": {"integrator": {"scheme": "midpoint"}}}, "planner.integrator.scheme"),
        ({"planner": {"zero_crossing": {"time_tolerance": 0.5}}}, "planner.zero_crossing.time_tolerance"),
        ({"planner": {"rule": 3}}, "planner.rule"),
        ({"planner": {"speed": 3}}, "planner.speed"),
        ({"library": {"t_max": 0}}, "library.t_max"),
        ({"library": {"flow_input_max": -1}}, "library.flow_input_max"),
        ({"problem": "walking-robot"}, "problem"),
        ({"problem": {"name": "bouncing-ball", "mass": 2}}, "problem"),
        ({"inflation_delta": -0.1}, "inflation_delta"),
        ({"output": {"plan": 3}}, "output.plan"),
        ({"schema_version": 2}, "schema_version"),
        ({"colour": "red"}, "colour"),
    ],
)
def test_bad_fields_report_their_path(patch, path):
    doc = base_doc()
    for key, value in patch.items():
        if isinstance(value, dict) and isinstance(doc.get(key), dict):
            for k, v in value.items():
                if isinstance(v, dict):
                    doc[key][k] = {**doc[key].get(k, {}), **v}
                else:
                    doc[key][k] = v
        else:
            doc[key] = value
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    assert info.value.path == path
    assert str(info.value).startswith(path + ":")


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("planner: [unclosed")
    with pytest.raises(ConfigError, match="not valid YAML"):
        load_config(bad)
    with pytest.raises(ConfigError, match="<root>"):
        parse_config([1, 2])


def test_default_config_path_honours_environment(monkeypatch, tmp_path):
    monkeypatch.delenv(CONFIG_ENV, raising=False)
    assert default_config_path() == BUNDLED_CONFIG
    monkeypatch.setenv(CONFIG_ENV, str(tmp_path / "mine.yaml"))
    assert default_config_path() == tmp_path / "mine.yaml"


# -- plan files -------------------------------------------------------------

def test_plan_round_trip_is_bit_exact(tmp_path, ball):
    rng = np.random.default_rng(0)
    for k in range(20):
        pair = simulate_random_pair(ball, rng)
        path = tmp_path / f"p{k}.json"
        write_plan(path, pair, "bouncing-ball", {"seed": k})
        back, doc = read_plan(path)
        assert doc["metadata"] == {"seed": k}
        for (ja, ta, xa, ua), (jb, tb, xb, ub) in zip(back.segments, pair.segments):
            assert ja == jb
            assert np.array_equal(ta, tb) and np.array_equal(xa, xb) and np.array_equal(ua, ub)


def test_plan_document_layout(problem):
    plan, u = analytic_plan(problem.system, step=1e-2)
    doc = plan_to_dict(plan, "bouncing-ball", {"seed": 1, "iterations": 2, "vertices": 3, "wall_ms": 4.0})
    assert doc["version"] == 1 and doc["system"] == "bouncing-ball"
    assert [d["j"] for d in doc["domain"]] == [0, 1]
    (jump,) = doc["jumps"]
    assert jump["j"] == 0 and jump["u"] == [u]
    assert jump["x_after"][1] == pytest.approx(14.00714, abs=1e-4)
    assert set(doc["metadata"]) == {"seed", "iterations", "vertices", "wall_ms"}


def _doc(problem):
    plan, _ = analytic_plan(problem.system, step=1e-2)
    return plan_to_dict(plan, "bouncing-ball")


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d.update(version=2), "unsupported plan version"),
        (lambda d: d.pop("jumps"), "missing field 'jumps'"),
        (lambda d: d["domain"][1].update(t_start=99.0), "not a hybrid time domain"),
        (lambda d: d["jumps"][0].update(u=[3.0]), "inconsistent"),
        (lambda d: d["flow_segments"][0]["samples"].clear(), "no samples"),
        (lambda d: d["flow_segments"][0]["samples"][0].pop("x"), "malformed"),
        (lambda d: d["domain"].pop(), "disagree"),
    ],
)
def test_schema_violations(problem, mutate, message):
    doc = _doc(problem)
    mutate(doc)
    with pytest.raises(PlanFormatError, match=message):
        plan_from_dict(doc)


def test_unreadable_plan_files(tmp_path):
    with pytest.raises(PlanFormatError, match="cannot read"):
        read_plan(tmp_path / "none.json")
    (tmp_path / "x.json").write_text("{not json")
    with pytest.raises(PlanFormatError, match="not valid JSON"):
        read_plan(tmp_path / "x.json")
    (tmp_path / "y.json").write_text("[1, 2]")
    with pytest.raises(PlanFormatError, match="JSON object"):
        read_plan(tmp_path / "y.json")


def test_trajectory_csv_duplicates_jump_instant(tmp_path, problem):
    plan, _ = analytic_plan(problem.system, step=1e-2)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(path, plan)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "j", "x_1", "x_2", "u_1"]
    body = [(float(r[0]), int(r[1]), float(r[2]), float(r[3])) for r in rows[1:]]
    assert len(body) == plan.arc.n_samples
    jump_rows = [k for k in range(1, len(body)) if body[k][1] != body[k - 1][1]]
    (k,) = jump_rows
    assert body[k][0] == body[k - 1][0]
    assert body[k][3] != body[k - 1][3]


def test_trajectory_csv_of_a_flow_is_increasing(tmp_path, ball):
    from hyrrt.simulator import ConstantInputSignal, continuous_simulator

    pair = continuous_simulator(ball, 2, [15.0, 0.0], ConstantInputSignal([1.0], 0.5))
    write_trajectory_csv(tmp_path / "f.csv", pair)
    with open(tmp_path / "f.csv") as fh:
        ts = [float(r[0]) for r in list(csv.reader(fh))[1:]]
    assert all(b > a for a, b in zip(ts, ts[1:]))


def test_plan_json_is_plain_json(tmp_path):
    pair = SolutionPair.point([1.0, 2.0], [0.5])
    write_plan(tmp_path / "p.json", pair, "bouncing-ball")
    doc = json.loads((tmp_path / "p.json").read_text())
    assert doc["jumps"] == [] and doc["domain"] == [{"j": 0, "t_start": 0.0, "t_end": 0.0}]
