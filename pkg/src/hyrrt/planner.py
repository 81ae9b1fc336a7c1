"""HyRRT search over hybrid time, plus a budgeted breadth-first baseline.

The tree stores states at vertices and solution pairs on edges. Each
iteration draws a random state from C' or D', picks the nearest vertex whose
state lies in the matching constraint set, and grows the tree from it by one
randomly chosen flow or jump.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .hybrid_time import SolutionPair, concatenate_pairs
from .input_library import InputLibrary, sample_flow_signal, sample_jump_value
from .simulator import (
    IntegratorConfig,
    PriorityRule,
    ZeroCrossingConfig,
    continuous_simulator,
    discrete_simulator,
)
from .system_model import MotionPlanningProblem, SystemDefinition, check_motion_plan, inflate


@dataclass(frozen=True)
class PlannerConfig:
    p_n: float = 0.5
    p_d: float = 0.5
    max_iterations: int = 1000
    goal_tolerance: float = 0.2
    rule: PriorityRule = PriorityRule.FLOW
    n_init_samples: int = 1
    constraint_inflation_s: float = 0.0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    zero_crossing: ZeroCrossingConfig = field(default_factory=ZeroCrossingConfig)
    seed: int = 0
    input_retries: int = 32
    trivial_steps: int = 10
    validation_tol: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "rule", PriorityRule(self.rule))
        if not 0 < self.p_n < 1:
            raise ValueError(f"p_n must lie in (0, 1), got {self.p_n}")
        if not 0 < self.p_d < 1:
            raise ValueError(f"p_d must lie in (0, 1), got {self.p_d}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.goal_tolerance > 0:
            raise ValueError("goal_tolerance must be positive")
        if self.n_init_samples < 1:
            raise ValueError("n_init_samples must be at least 1")
        if self.constraint_inflation_s < 0:
            raise ValueError("constraint_inflation_s must be nonnegative")
        if self.input_retries < 1:
            raise ValueError("input_retries must be at least 1")


class Outcome(str, enum.Enum):
    PLAN_FOUND = "plan-found"
    BUDGET_EXHAUSTED = "budget-exhausted"


class ExtendStatus(str, enum.Enum):
    ADVANCED = "Advanced"
    TRAPPED = "Trapped"


@dataclass(frozen=True)
class Edge:
    parent: int
    child: int
    pair: SolutionPair


class SearchTree:
    """Directed tree with vertex states kept in a growing array for fast scans.

    ``flow_constraint`` and ``jump_constraint`` are state predicates (the sets
    X_c and X_d); their value is cached per vertex when it is added.
    """

    def __init__(self, state_dim: int, flow_constraint: Callable, jump_constraint: Callable):
        self.state_dim = state_dim
        self.flow_constraint = flow_constraint
        self.jump_constraint = jump_constraint
        self._states = np.empty((16, state_dim))
        self._in_flow = np.zeros(16, dtype=bool)
        self._in_jump = np.zeros(16, dtype=bool)
        self.n_vertices = 0
        self.parent: list[Optional[int]] = []
        self.edge_into: list[Optional[Edge]] = []
        self.edges: list[Edge] = []

    def add_vertex(self, x, parent: Optional[int] = None, pair: Optional[SolutionPair] = None) -> int:
        x = np.asarray(x, dtype=float)
        if (parent is None) != (pair is None):
            raise ValueError("a non-root vertex needs both a parent and an edge pair")
        if parent is not None and not 0 <= parent < self.n_vertices:
            raise ValueError(f"unknown parent vertex {parent}")
        n = self.n_vertices
        if n == len(self._states):
            self._states = np.concatenate([self._states, np.empty_like(self._states)])
            self._in_flow = np.concatenate([self._in_flow, np.zeros_like(self._in_flow)])
            self._in_jump = np.concatenate([self._in_jump, np.zeros_like(self._in_jump)])
        self._states[n] = x
        self._in_flow[n] = self.flow_constraint(x)
        self._in_jump[n] = self.jump_constraint(x)
        self.n_vertices += 1
        self.parent.append(parent)
        edge = None
        if parent is not None:
            edge = Edge(parent, n, pair)
            self.edges.append(edge)
        self.edge_into.append(edge)
        return n

    def state(self, v: int) -> np.ndarray:
        if not 0 <= v < self.n_vertices:
            raise IndexError(f"vertex {v} not in tree")
        return self._states[v].copy()

    @property
    def states(self) -> np.ndarray:
        return self._states[: self.n_vertices]

    def mask(self, constraint: str) -> np.ndarray:
        if constraint == "flow":
            return self._in_flow[: self.n_vertices]
        if constraint == "jump":
            return self._in_jump[: self.n_vertices]
        raise ValueError(f"unknown constraint {constraint!r}")

    @property
    def roots(self) -> list[int]:
        return [v for v, p in enumerate(self.parent) if p is None]

    def path_edges(self, v: int) -> list[Edge]:
        """Edges from the root of ``v`` down to ``v``."""
        path = []
        while self.edge_into[v] is not None:
            edge = self.edge_into[v]
            path.append(edge)
            v = edge.parent
        path.reverse()
        return path

    def root_of(self, v: int) -> int:
        while self.parent[v] is not None:
            v = self.parent[v]
        return v

    def check_invariants(self, tol: float = 1e-9) -> list[str]:
        """Return a description of every broken tree invariant (empty when sound)."""
        problems = []
        children_seen = set()
        for e in self.edges:
            if e.child in children_seen:
                problems.append(f"vertex {e.child} has two incoming edges")
            children_seen.add(e.child)
            if not e.parent < e.child:
                problems.append(f"edge {e.parent}->{e.child} does not point to a newer vertex")
            if np.linalg.norm(e.pair.initial_state() - self._states[e.parent]) > tol:
                problems.append(f"edge {e.parent}->{e.child} does not start at its parent state")
            if np.linalg.norm(e.pair.final_state() - self._states[e.child]) > tol:
                problems.append(f"edge {e.parent}->{e.child} does not end at its child state")
        for v in range(self.n_vertices):
            has_edge = self.edge_into[v] is not None
            if has_edge != (self.parent[v] is not None):
                problems.append(f"vertex {v} parent link and edge disagree")
        return problems


@dataclass
class PlannerResult:
    outcome: Outcome
    plan: Optional[SolutionPair]
    tree: SearchTree
    iterations: int
    n_vertices: int
    wall_time: float

    @property
    def found(self) -> bool:
        return self.outcome is Outcome.PLAN_FOUND


# --------------------------------------------------------------------------


def constraint_sets(system: SystemDefinition, s: float):
    """State predicates for X_c and X_d: C' and D', widened by ``s`` when positive."""
    source = inflate(system, s) if s > 0 else system
    return source.flow_state_membership, source.jump_state_membership


def init_tree(problem: MotionPlanningProblem, n_init_samples: int, rng: np.random.Generator, s: float = 0.0) -> SearchTree:
    """Tree with ``n_init_samples`` roots drawn from X0."""
    if n_init_samples < 1:
        raise ValueError("n_init_samples must be at least 1")
    flow_c, jump_c = constraint_sets(problem.system, s)
    tree = SearchTree(problem.system.state_dim, flow_c, jump_c)
    for _ in range(n_init_samples):
        x = np.asarray(problem.x0_sampler(rng), dtype=float)
        if x.shape != (problem.system.state_dim,) or not np.all(np.isfinite(x)):
            raise ValueError(f"X0 sampler returned an invalid state {x}")
        tree.add_vertex(x)
    return tree


def random_state(sampler: Callable, rng: np.random.Generator) -> np.ndarray:
    return np.asarray(sampler(rng), dtype=float)


def nearest_neighbor(
    x_rand, tree: SearchTree, constraint: Union[str, Callable, None] = None
) -> Optional[int]:
    """Vertex closest to ``x_rand`` among those satisfying ``constraint``; lowest id on ties.

    ``constraint`` is ``"flow"`` or ``"jump"`` (the cached X_c / X_d masks), a
    state predicate, or ``None`` for no restriction. Returns ``None`` when no
    vertex qualifies.
    """
    n = tree.n_vertices
    if n == 0:
        return None
    if constraint is None:
        mask = np.ones(n, dtype=bool)
    elif isinstance(constraint, str):
        mask = tree.mask(constraint)
    else:
        mask = np.array([bool(constraint(x)) for x in tree.states])
    if not mask.any():
        return None
    diff = tree.states - np.asarray(x_rand, dtype=float)
    dist = np.einsum("ij,ij->i", diff, diff)
    dist = np.where(mask, dist, np.inf)
    return int(np.argmin(dist))


def _has_unsafe_sample(problem: MotionPlanningProblem, pair: SolutionPair) -> bool:
    return any(problem.unsafe_membership(x, u) for _, _, x, u in pair.samples())


def _flow_pair(x, library, system, config, rng):
    for _ in range(config.input_retries):
        signal = sample_flow_signal(library, rng)
        if system.flow_membership(x, signal.value):
            break
    else:
        return None
    return continuous_simulator(system, config.rule, x, signal, config.integrator, config.zero_crossing)


def _jump_pair(x, library, system, problem, config, rng):
    for _ in range(config.input_retries):
        u = sample_jump_value(library, rng)
        if system.jump_membership(x, u):
            return discrete_simulator(system, x, u, problem)
    return None


def new_state(
    v_cur: int,
    tree: SearchTree,
    library: InputLibrary,
    system: SystemDefinition,
    problem: MotionPlanningProblem,
    config: PlannerConfig,
    rng: np.random.Generator,
):
    """Grow one solution pair from vertex ``v_cur``.

    Returns ``(generated, x_new, pair)``. ``generated`` is false when no
    admissible input was found within the retry budget, when the pair is
    trivial (a flow shorter than ``trivial_steps`` integrator steps counts as
    trivial), or when any sample lies in the unsafe set.
    """
    x = tree.state(v_cur)
    in_c = system.flow_state_membership(x)
    in_d = system.jump_state_membership(x)
    if in_c and in_d:
        by_flow = rng.random() <= config.p_d
    elif in_c or in_d:
        by_flow = in_c
    else:
        return False, x, None

    if by_flow:
        pair = _flow_pair(x, library, system, config, rng)
        if pair is None or pair.max_point.t < config.trivial_steps * config.integrator.step:
            return False, x, pair
    else:
        pair = _jump_pair(x, library, system, problem, config, rng)
        if pair is None:
            return False, x, None
    if pair.is_trivial() or _has_unsafe_sample(problem, pair):
        return False, pair.final_state(), pair
    return True, pair.final_state(), pair


def extend(
    tree: SearchTree,
    x_rand,
    library: InputLibrary,
    system: SystemDefinition,
    problem: MotionPlanningProblem,
    config: PlannerConfig,
    constraint,
    rng: np.random.Generator,
) -> ExtendStatus:
    v_cur = nearest_neighbor(x_rand, tree, constraint)
    if v_cur is None:
        return ExtendStatus.TRAPPED
    generated, x_new, pair = new_state(v_cur, tree, library, system, problem, config, rng)
    if not generated:
        return ExtendStatus.TRAPPED
    tree.add_vertex(x_new, v_cur, pair)
    return ExtendStatus.ADVANCED


def _path_plan(tree: SearchTree, v: int, problem: MotionPlanningProblem) -> Optional[SolutionPair]:
    """Concatenate the edges from the root to ``v``, or ``None`` if the path breaks the
    rule that a purely continuous edge following another must start inside C."""
    edges = tree.path_edges(v)
    if not edges:
        return SolutionPair.point(tree.state(v), problem.default_input())
    system = problem.system
    for a, b in zip(edges[:-1], edges[1:]):
        if a.pair.is_purely_continuous() and b.pair.is_purely_continuous():
            j, ts, xs, us = b.pair.segments[0]
            if not system.flow_membership(xs[0], us[0]):
                return None
    plan = edges[0].pair
    for e in edges[1:]:
        plan = concatenate_pairs(plan, e.pair)
    return plan


def check_for_motion_plan(
    tree: SearchTree,
    problem: MotionPlanningProblem,
    eps: float,
    candidates=None,
    tol: float = 1e-6,
) -> Optional[SolutionPair]:
    """First root-to-vertex path ending within ``eps`` of Xf that passes ``check_motion_plan``.

    ``candidates`` restricts the vertices examined (all vertices by default).
    """
    vertices = range(tree.n_vertices) if candidates is None else candidates
    for v in vertices:
        if problem.xf_distance(tree.state(v)) > eps:
            continue
        if not problem.x0_membership(tree.state(tree.root_of(v))):
            continue
        plan = _path_plan(tree, v, problem)
        if plan is None:
            continue
        if check_motion_plan(problem, plan, eps, tol).valid:
            return plan
    return None


def hyrrt(problem: MotionPlanningProblem, library: InputLibrary, config: PlannerConfig = PlannerConfig()) -> PlannerResult:
    """Run the HyRRT loop for at most ``config.max_iterations`` iterations."""
    start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    system = problem.system
    tree = init_tree(problem, config.n_init_samples, rng, config.constraint_inflation_s)

    def finish(outcome, plan, iterations):
        return PlannerResult(outcome, plan, tree, iterations, tree.n_vertices, time.perf_counter() - start)

    plan = check_for_motion_plan(tree, problem, config.goal_tolerance, tol=config.validation_tol)
    if plan is not None:
        return finish(Outcome.PLAN_FOUND, plan, 0)
    for k in range(1, config.max_iterations + 1):
        if rng.random() <= config.p_n:
            x_rand = random_state(system.flow_state_sampler, rng)
            constraint = "flow"
        else:
            x_rand = random_state(system.jump_state_sampler, rng)
            constraint = "jump"
        status = extend(tree, x_rand, library, system, problem, config, constraint, rng)
        if status is ExtendStatus.ADVANCED:
            plan = check_for_motion_plan(
                tree, problem, config.goal_tolerance, [tree.n_vertices - 1], config.validation_tol
            )
            if plan is not None:
                return finish(Outcome.PLAN_FOUND, plan, k)
    return finish(Outcome.BUDGET_EXHAUSTED, None, config.max_iterations)


def forward_propagation_bfs(
    problem: MotionPlanningProblem,
    library: InputLibrary,
    depth_budget: int,
    branch_budget: int,
    eps: float,
    rng: np.random.Generator,
    config: PlannerConfig = PlannerConfig(),
    max_frontier: int = 64,
    stats: Optional[dict] = None,
) -> Optional[SolutionPair]:
    """Layer-by-layer forward propagation from X0.

    Every frontier vertex is extended ``branch_budget`` times with random
    inputs, for at most ``depth_budget`` layers. A layer larger than
    ``max_frontier`` is thinned by uniform subsampling, so the search is a
    budgeted under-approximation of the full set of reachable pairs. When
    ``stats`` is given it receives the number of vertices and layers explored.
    """
    if depth_budget < 0 or branch_budget < 1 or max_frontier < 1:
        raise ValueError("budgets must be positive")
    tree = init_tree(problem, config.n_init_samples, rng)
    if stats is not None:
        stats.update(vertices=tree.n_vertices, layers=0, tree=tree)
    plan = check_for_motion_plan(tree, problem, eps, tol=config.validation_tol)
    if plan is not None:
        return plan
    system = problem.system
    frontier = tree.roots
    for depth in range(1, depth_budget + 1):
        if stats is not None:
            stats["layers"] = depth
        layer = []
        for v in frontier:
            for _ in range(branch_budget):
                generated, x_new, pair = new_state(v, tree, library, system, problem, config, rng)
                if not generated:
                    continue
                child = tree.add_vertex(x_new, v, pair)
                if stats is not None:
                    stats["vertices"] = tree.n_vertices
                plan = check_for_motion_plan(tree, problem, eps, [child], config.validation_tol)
                if plan is not None:
                    return plan
                layer.append(child)
        if not layer:
            return None
        if len(layer) > max_frontier:
            keep = rng.choice(len(layer), size=max_frontier, replace=False)
            layer = [layer[i] for i in sorted(keep)]
        frontier = layer
    return None
