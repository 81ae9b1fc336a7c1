"""Hybrid systems H = (C, f, D, g), motion planning problems, and validators.

Sets are never stored geometrically. A system exposes membership predicates
for C and D, zero-crossing functions used by the event detector, projected
state memberships for C' and D', and samplers over C' and D'. Everything the
planner and validators need goes through those callables.

Built-in systems are plain classes (not closures) so that they pickle and can
be shipped to worker processes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .hybrid_time import SolutionPair

#: Tolerance on zero-crossing values at set boundaries.
MEMBERSHIP_TOL = 1e-9

Vector = np.ndarray


@dataclass(frozen=True)
class SystemDefinition:
    """Data of a hybrid system with inputs.

    ``jump_map`` returns a list of successor states (one for forward systems).
    ``flow_zero_crossing`` is positive in the interior of C, negative outside;
    ``jump_zero_crossing`` plays the same role for C \\ D and drives event
    detection under jump priority.
    """

    name: str
    state_dim: int
    input_dim: int
    flow_map: Callable[[Vector, Vector], Vector]
    jump_map: Callable[[Vector, Vector], list]
    flow_membership: Callable[[Vector, Vector], bool]
    flow_zero_crossing: Callable[[Vector, Vector], float]
    jump_membership: Callable[[Vector, Vector], bool]
    jump_zero_crossing: Callable[[Vector, Vector], float]
    flow_state_membership: Callable[[Vector], bool]
    jump_state_membership: Callable[[Vector], bool]
    flow_state_sampler: Callable[[np.random.Generator], Vector]
    jump_state_sampler: Callable[[np.random.Generator], Vector]
    flow_input_range: tuple
    jump_input_range: tuple
    jump_inverse: Optional[Callable[[Vector, Vector], list]] = None
    inflate_hook: Optional[Callable[[float], "SystemDefinition"]] = None
    backward_hook: Optional[Callable[[], "SystemDefinition"]] = None
    tol: float = MEMBERSHIP_TOL

    def in_flow_or_jump(self, x, u) -> bool:
        return bool(self.flow_membership(x, u) or self.jump_membership(x, u))


# --------------------------------------------------------------------------
# actuated bouncing ball


@dataclass(frozen=True)
class BouncingBall:
    """Ball over a fixed surface; the surface adds ``u`` to the rebound velocity.

    ``delta > 0`` gives the delta-inflated system, ``direction = -1`` the
    backward-in-time system. The sampling box is ``[0, height_max] x
    [-speed_max, speed_max]``.
    """

    gamma: float = 9.81
    restitution: float = 0.8
    delta: float = 0.0
    direction: int = 1
    height_max: float = 20.0
    speed_max: float = 20.0
    input_min: float = 0.0
    input_max: float = 5.0
    tol: float = MEMBERSHIP_TOL

    def flow_map(self, x, u):
        if self.direction > 0:
            return np.array([x[1], -self.gamma])
        return np.array([-x[1], self.gamma])

    def forward_jump(self, x, u):
        return np.array([x[0], -self.restitution * x[1] + u[0]])

    def backward_jump(self, x, u):
        return np.array([x[0], (-x[1] + u[0]) / self.restitution])

    def jump_map(self, x, u):
        if self.direction > 0:
            return [self.forward_jump(x, u)]
        return [self.backward_jump(x, u)]

    def jump_inverse(self, x, u):
        if self.direction > 0:
            return [self.backward_jump(x, u)]
        return [self.forward_jump(x, u)]

    def flow_zero_crossing(self, x, u):
        return float(x[0] + self.delta)

    def flow_membership(self, x, u):
        return bool(x[0] + self.delta >= -self.tol)

    def flow_state_membership(self, x):
        return bool(x[0] + self.delta >= -self.tol)

    def _near_surface(self, x):
        d = self.delta + self.tol
        if abs(x[0]) <= d and (x[1] <= self.tol if self.direction > 0 else x[1] >= -self.tol):
            return True
        # inflation also adds a disc of radius delta around the origin
        return self.delta > 0 and x[0] * x[0] + x[1] * x[1] <= d * d

    def jump_membership(self, x, u):
        if u[0] < -self.delta - self.tol:
            return False
        if self.direction < 0:
            return bool(abs(x[0]) <= self.tol and x[1] >= u[0] - self.tol)
        return bool(self._near_surface(x))

    def jump_state_membership(self, x):
        return bool(self._near_surface(x))

    def jump_zero_crossing(self, x, u):
        # D lies on the boundary of C, so the same function detects leaving C \ D
        return float(x[0] + self.delta)

    def flow_state_sampler(self, rng):
        return np.array(
            [rng.uniform(-self.delta, self.height_max), rng.uniform(-self.speed_max, self.speed_max)]
        )

    def jump_state_sampler(self, rng):
        x1 = rng.uniform(-self.delta, self.delta) if self.delta > 0 else 0.0
        if self.direction > 0:
            return np.array([x1, rng.uniform(-self.speed_max, 0.0)])
        return np.array([x1, rng.uniform(0.0, self.speed_max)])

    def inflated(self, delta):
        return replace(self, delta=float(delta)).system()

    def reversed_time(self):
        return replace(self, direction=-self.direction).system()

    def system(self) -> SystemDefinition:
        name = "bouncing-ball"
        if self.direction < 0:
            name += "-backward"
        if self.delta > 0:
            name += f"-inflated({self.delta:g})"
        box = (np.array([self.input_min]), np.array([self.input_max]))
        return SystemDefinition(
            name=name,
            state_dim=2,
            input_dim=1,
            flow_map=self.flow_map,
            jump_map=self.jump_map,
            flow_membership=self.flow_membership,
            flow_zero_crossing=self.flow_zero_crossing,
            jump_membership=self.jump_membership,
            jump_zero_crossing=self.jump_zero_crossing,
            flow_state_membership=self.flow_state_membership,
            jump_state_membership=self.jump_state_membership,
            flow_state_sampler=self.flow_state_sampler,
            jump_state_sampler=self.jump_state_sampler,
            flow_input_range=box,
            jump_input_range=box,
            jump_inverse=self.jump_inverse,
            inflate_hook=self.inflated if self.direction > 0 and self.delta == 0 else None,
            backward_hook=self.reversed_time if self.delta == 0 else None,
            tol=self.tol,
        )


def bouncing_ball(gamma: float = 9.81, restitution: float = 0.8, **kwargs) -> SystemDefinition:
    """The actuated bouncing ball with gravity ``gamma`` and restitution ``restitution``."""
    return BouncingBall(gamma=gamma, restitution=restitution, **kwargs).system()


# --------------------------------------------------------------------------
# derived systems


def inflate(system: SystemDefinition, delta: float) -> SystemDefinition:
    """The delta-inflation of ``system``: C and D fattened by delta-balls in x and u."""
    if not delta > 0:
        raise ValueError(f"inflation radius must be positive, got {delta}")
    if system.inflate_hook is None:
        raise ValueError(f"inflation unavailable for system {system.name!r}")
    return system.inflate_hook(delta)


class _GenericBackward:
    """Backward-in-time data built from a user-supplied jump preimage."""

    def __init__(self, forward: SystemDefinition):
        self.forward = forward

    def flow_map(self, x, u):
        return -np.asarray(self.forward.flow_map(x, u), dtype=float)

    def jump_map(self, x, u):
        fw = self.forward
        return [np.asarray(z, dtype=float) for z in fw.jump_inverse(x, u) if fw.jump_membership(z, u)]

    def jump_membership(self, x, u):
        return len(self.jump_map(x, u)) > 0

    def jump_state_membership(self, x):
        lo, hi = self.forward.jump_input_range
        for w in np.linspace(0.0, 1.0, 5):
            if self.jump_membership(x, lo + w * (hi - lo)):
                return True
        return False

    def jump_inverse(self, x, u):
        return self.forward.jump_map(x, u)

    def jump_state_sampler(self, rng):
        fw = self.forward
        lo, hi = fw.jump_input_range
        for _ in range(1000):
            z = fw.jump_state_sampler(rng)
            u = rng.uniform(lo, hi)
            if fw.jump_membership(z, u):
                return np.asarray(fw.jump_map(z, u)[0], dtype=float)
        raise RuntimeError("could not sample the backward jump set")

    def original(self):
        return self.forward


def backward(system: SystemDefinition) -> SystemDefinition:
    """The backward-in-time system: same C, negated f, preimage jump map and set."""
    if system.backward_hook is not None:
        return system.backward_hook()
    if system.jump_inverse is None:
        raise ValueError("backward jump map unavailable")
    bw = _GenericBackward(system)
    return replace(
        system,
        name=system.name + "-backward",
        flow_map=bw.flow_map,
        jump_map=bw.jump_map,
        jump_membership=bw.jump_membership,
        jump_state_membership=bw.jump_state_membership,
        jump_state_sampler=bw.jump_state_sampler,
        jump_inverse=bw.jump_inverse,
        inflate_hook=None,
        backward_hook=bw.original,
    )


# --------------------------------------------------------------------------
# motion planning problems


@dataclass(frozen=True)
class MotionPlanningProblem:
    """P = (X0, Xf, Xu, H) given through samplers, predicates and a distance."""

    system: SystemDefinition
    x0_sampler: Callable[[np.random.Generator], Vector]
    x0_membership: Callable[[Vector], bool]
    xf_distance: Callable[[Vector], float]
    unsafe_membership: Callable[[Vector, Vector], bool]
    name: str = "problem"

    def with_system(self, system: SystemDefinition) -> "MotionPlanningProblem":
        return replace(self, system=system)

    def default_input(self) -> Vector:
        """A flow input in the middle of the system's input box."""
        lo, hi = self.system.flow_input_range
        return 0.5 * (np.asarray(lo, dtype=float) + np.asarray(hi, dtype=float))


@dataclass(frozen=True)
class BallTargets:
    """X0 and Xf as closed balls (radius 0 gives singletons) and Xu as an input band."""

    x0: tuple = (15.0, 0.0)
    xf: tuple = (10.0, 0.0)
    x0_radius: float = 0.0
    xf_radius: float = 0.0
    input_min: float = 0.0
    input_max: float = 5.0
    tol: float = MEMBERSHIP_TOL

    def x0_sampler(self, rng):
        centre = np.array(self.x0, dtype=float)
        if self.x0_radius == 0:
            return centre
        return centre + sample_ball(rng, len(centre), self.x0_radius)

    def x0_membership(self, x):
        return bool(np.linalg.norm(np.asarray(x) - np.array(self.x0)) <= self.x0_radius + self.tol)

    def xf_distance(self, x):
        d = float(np.linalg.norm(np.asarray(x) - np.array(self.xf))) - self.xf_radius
        return max(d, 0.0)

    def unsafe_membership(self, x, u):
        return any(v <= self.input_min or v >= self.input_max for v in np.ravel(u).tolist())


def bouncing_ball_problem(
    x0=(15.0, 0.0),
    xf=(10.0, 0.0),
    gamma: float = 9.81,
    restitution: float = 0.8,
    input_min: float = 0.0,
    input_max: float = 5.0,
    x0_radius: float = 0.0,
    xf_radius: float = 0.0,
) -> MotionPlanningProblem:
    """Drop the ball from ``x0`` and bring it to ``xf`` using inputs in ``(input_min, input_max)``."""
    system = BouncingBall(gamma=gamma, restitution=restitution, input_min=input_min, input_max=input_max).system()
    targets = BallTargets(
        x0=tuple(map(float, x0)),
        xf=tuple(map(float, xf)),
        x0_radius=x0_radius,
        xf_radius=xf_radius,
        input_min=input_min,
        input_max=input_max,
    )
    return MotionPlanningProblem(
        system=system,
        x0_sampler=targets.x0_sampler,
        x0_membership=targets.x0_membership,
        xf_distance=targets.xf_distance,
        unsafe_membership=targets.unsafe_membership,
        name="bouncing-ball",
    )


PROBLEMS: dict[str, Callable[..., MotionPlanningProblem]] = {
    "bouncing-ball": bouncing_ball_problem,
}


def get_problem(name: str, **overrides) -> MotionPlanningProblem:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {sorted(PROBLEMS)}") from None
    return factory(**overrides)


# --------------------------------------------------------------------------
# validation


class Condition(str, enum.Enum):
    INITIAL_SET = "solution-1:initial-in-closure-C-or-D"
    DOMAIN = "solution-1:equal-domains"
    FLOW_SET = "solution-2:flow-in-C"
    FLOW_MAP = "solution-2:flow-map-residual"
    JUMP_SET = "solution-3:jump-in-D"
    JUMP_MAP = "solution-3:jump-map"
    PLAN_INITIAL = "plan-1:initial-state-in-X0"
    PLAN_SOLUTION = "plan-2:solution-pair"
    PLAN_FINAL = "plan-3:final-state-in-Xf"
    PLAN_UNSAFE = "plan-4:unsafe-set"


@dataclass(frozen=True)
class Violation:
    condition: Condition
    t: float
    j: int
    magnitude: float
    message: str = ""

    def __str__(self):
        return f"[{self.condition.value}] at (t={self.t:.6g}, j={self.j}): {self.message}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    max_flow_residual: float = 0.0
    final_distance: Optional[float] = None

    @property
    def valid(self) -> bool:
        return not self.violations

    def conditions(self) -> set:
        return {v.condition for v in self.violations}

    def add(self, condition, t, j, magnitude, message=""):
        self.violations.append(Violation(condition, float(t), int(j), float(magnitude), message))

    def extend(self, other: "ValidationReport"):
        self.violations.extend(other.violations)
        self.max_flow_residual = max(self.max_flow_residual, other.max_flow_residual)

    def summary(self) -> str:
        lines = [f"valid: {self.valid}", f"max flow residual: {self.max_flow_residual:.3e}"]
        if self.final_distance is not None:
            lines.append(f"final-state distance: {self.final_distance:.6g}")
        lines += [str(v) for v in self.violations]
        return "\n".join(lines)


_ROUNDING = 64 * np.finfo(float).eps


def validate_solution_pair(system: SystemDefinition, pair: SolutionPair, tol: float = 1e-6) -> ValidationReport:
    """Check the solution-pair conditions on every stored sample and report all violations.

    The flow equation is checked step by step with the trapezoidal rule,
    ``|x[k+1] - x[k] - dt * (f(x[k], u[k]) + f(x[k+1], u[k])) / 2|``, against
    ``tol * (1 + |f|) * dt`` plus a floating-point floor. The input stored at a
    sample acts on the step that follows it.
    """
    report = ValidationReport()
    if not pair.arc.same_grid(pair.input):
        report.add(Condition.DOMAIN, 0.0, 0, 1.0, "arc and input domains differ")
        return report

    segs = pair.segments
    x0, u0 = segs[0][2][0], segs[0][3][0]
    if not system.in_flow_or_jump(x0, u0):
        report.add(Condition.INITIAL_SET, 0.0, 0, 1.0, f"({x0}, {u0}) is in neither closure(C) nor D")

    for j, ts, xs, us in segs:
        n = len(ts)
        if n < 2:
            continue
        for k in range(1, n - 1):
            if not system.flow_membership(xs[k], us[k]):
                report.add(
                    Condition.FLOW_SET, ts[k], j, system.flow_zero_crossing(xs[k], us[k]), f"x={xs[k]} not in C"
                )
        fa = np.array([system.flow_map(xs[k], us[k]) for k in range(n - 1)], dtype=float)
        # f(x[k+1], u[k]) is the next step's left value whenever the input is unchanged
        fb = np.empty_like(fa)
        fb[:-1] = fa[1:]
        held = np.append(np.all(us[1:-1] == us[:-2], axis=1), False)
        for k in np.flatnonzero(~held):
            fb[k] = system.flow_map(xs[k + 1], us[k])
        dt = np.diff(ts)
        fbar = 0.5 * (fa + fb)
        with np.errstate(invalid="ignore", over="ignore"):
            err = np.linalg.norm(np.diff(xs, axis=0) - dt[:, None] * fbar, axis=1)
            scale = (1.0 + np.linalg.norm(fbar, axis=1)) * dt
            norms = np.linalg.norm(xs, axis=1)
            floor = _ROUNDING * (1.0 + norms[:-1] + norms[1:])
            residual = np.maximum(err - floor, 0.0) / scale
        finite = np.isfinite(err)
        if finite.any():
            report.max_flow_residual = max(report.max_flow_residual, float(residual[finite].max()))
        for k in np.flatnonzero(~finite | (residual > tol)):
            if not finite[k]:
                report.add(Condition.FLOW_MAP, ts[k], j, np.inf, "non-finite flow")
            else:
                r = float(residual[k])
                report.add(Condition.FLOW_MAP, ts[k], j, r, f"flow residual {r:.3e} > {tol:g}")

    for (j, ts, xs, us), (_, ts_next, xs_next, _) in zip(segs[:-1], segs[1:]):
        xb, ub, xa = xs[-1], us[-1], xs_next[0]
        if not system.jump_membership(xb, ub):
            report.add(Condition.JUMP_SET, ts[-1], j, 1.0, f"({xb}, {ub}) not in D")
            continue
        images = system.jump_map(xb, ub)
        gaps = [np.linalg.norm(xa - z) / (1.0 + np.linalg.norm(z)) for z in images]
        gap = min(gaps) if gaps else np.inf
        if gap > tol:
            report.add(Condition.JUMP_MAP, ts[-1], j, gap, f"state after jump {xa} is not in g({xb}, {ub})")
    return report


def check_motion_plan(problem: MotionPlanningProblem, pair: SolutionPair, eps: float, tol: float = 1e-6) -> ValidationReport:
    """Check the motion-plan conditions, with the goal relaxed to ``|x|_Xf <= eps``."""
    report = ValidationReport()
    x0 = pair.initial_state()
    if not problem.x0_membership(x0):
        report.add(Condition.PLAN_INITIAL, 0.0, 0, 1.0, f"initial state {x0} not in X0")
    sol = validate_solution_pair(problem.system, pair, tol)
    report.extend(sol)
    if not sol.valid:
        report.add(Condition.PLAN_SOLUTION, 0.0, 0, len(sol.violations), "not a solution pair")
    T, J = pair.max_point
    dist = float(problem.xf_distance(pair.final_state()))
    report.final_distance = dist
    if dist > eps:
        shown = float(f"{dist:.6g}")
        report.add(Condition.PLAN_FINAL, T, J, dist, f"final-state distance {shown!r} > {eps!r}")
    unsafe = problem.unsafe_membership
    for j, ts, xs, us in pair.segments:
        for k in range(len(ts)):
            if unsafe(xs[k], us[k]):
                report.add(Condition.PLAN_UNSAFE, ts[k], j, 1.0, f"({xs[k]}, {us[k]}) in Xu")
    return report


def sample_ball(rng: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    """Uniform sample from the closed ball of ``radius`` in ``R^dim``."""
    v = rng.standard_normal(dim)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return np.zeros(dim)
    return v / norm * radius * rng.random() ** (1.0 / dim)


def check_clearance(
    problem: MotionPlanningProblem,
    pair: SolutionPair,
    delta: float,
    n_samples: int,
    rng: Optional[np.random.Generator] = None,
    eps: float = 0.0,
) -> bool:
    """Monte Carlo test that ``pair`` keeps safety and dynamics clearance ``delta``.

    Each stored sample is perturbed by ``n_samples`` uniform points of the
    delta-balls in state and input (plus the unperturbed point). A single
    failing point rejects; passing is only evidence. ``eps`` relaxes the goal
    set the same way the planner does.
    """
    if not delta > 0:
        raise ValueError(f"clearance radius must be positive, got {delta}")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(0) if rng is None else rng
    system = problem.system
    n, m = system.state_dim, system.input_dim

    def ball_points(x, u):
        yield x, u
        for _ in range(n_samples):
            yield x + sample_ball(rng, n, delta), u + sample_ball(rng, m, delta)

    x0 = pair.initial_state()
    for x, _ in ball_points(x0, np.zeros(m)):
        if not problem.x0_membership(x):
            return False
    xT = pair.final_state()
    for x, _ in ball_points(xT, np.zeros(m)):
        if problem.xf_distance(x) > eps + system.tol:
            return False

    segs = pair.segments
    for idx, (j, ts, xs, us) in enumerate(segs):
        flowing = ts[-1] > ts[0]
        for k in range(len(ts)):
            jumps_here = k == len(ts) - 1 and idx < len(segs) - 1
            for x, u in ball_points(xs[k], us[k]):
                if problem.unsafe_membership(x, u):
                    return False
                if flowing and not system.flow_membership(x, u):
                    return False
                if jumps_here and not system.jump_membership(x, u):
                    return False
    return True
