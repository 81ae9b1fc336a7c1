"""Flow and jump simulation for hybrid systems.

Flows are integrated with a fixed-step explicit scheme. The simulation stops
at the end of the input signal or where the pair leaves the allowed set,
whichever comes first. That exit time is located by bisection on the system's
zero-crossing function.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .hybrid_time import SolutionPair
from .system_model import MotionPlanningProblem, SystemDefinition


class Scheme(str, enum.Enum):
    EULER = "explicit-euler"
    RK4 = "rk4"


class PriorityRule(enum.IntEnum):
    """How to resolve states in both C and D: 1 forces a jump, 2 lets the flow continue."""

    JUMP = 1
    FLOW = 2


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: Scheme = Scheme.RK4
    step: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.step > 0:
            raise ValueError(f"integrator step must be positive, got {self.step}")


@dataclass(frozen=True)
class ZeroCrossingConfig:
    """Bisection stops once the bracket is below ``time_tolerance`` and the
    zero-crossing value at the kept (inside) end is below ``value_tolerance``,
    or after ``max_bisections`` halvings."""

    time_tolerance: float = 1e-6
    max_bisections: int = 60
    value_tolerance: float = 1e-10

    def __post_init__(self):
        if not self.time_tolerance > 0:
            raise ValueError("time_tolerance must be positive")
        if self.max_bisections < 0:
            raise ValueError("max_bisections must be nonnegative")


@dataclass(frozen=True)
class ConstantInputSignal:
    value: np.ndarray
    duration: float

    def __post_init__(self):
        object.__setattr__(self, "value", np.atleast_1d(np.asarray(self.value, dtype=float)))
        if not self.duration > 0:
            raise ValueError(f"input duration must be positive, got {self.duration}")


def integrate_step(flow_map, x, u, step: float, scheme=Scheme.RK4) -> np.ndarray:
    """One explicit step of length ``step`` with the input held at ``u``."""
    if not step > 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    if scheme is not Scheme.RK4 and Scheme(scheme) is Scheme.EULER:
        out = x + step * np.asarray(flow_map(x, u), dtype=float)
    else:
        half = 0.5 * step
        k1 = np.asarray(flow_map(x, u), dtype=float)
        k2 = np.asarray(flow_map(x + half * k1, u), dtype=float)
        k3 = np.asarray(flow_map(x + half * k2, u), dtype=float)
        k4 = np.asarray(flow_map(x + step * k3, u), dtype=float)
        out = x + (step / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    if not all(map(math.isfinite, out.tolist())):
        raise FloatingPointError("flow map diverged")
    return out


def _inside(system: SystemDefinition, rule: PriorityRule, x, u) -> bool:
    """Whether flowing may continue through (x, u) under ``rule``."""
    if not system.flow_membership(x, u):
        return False
    if rule is PriorityRule.JUMP and system.jump_membership(x, u):
        return False
    # the membership tolerance band is not inside: bisection must land on h >= 0
    return _crossing_value(system, rule, x, u) >= 0.0


def _crossing_value(system: SystemDefinition, rule: PriorityRule, x, u) -> float:
    if rule is PriorityRule.JUMP:
        return system.jump_zero_crossing(x, u)
    return system.flow_zero_crossing(x, u)


def zero_crossing_time(
    times,
    states,
    signal: ConstantInputSignal,
    rule: PriorityRule,
    system: SystemDefinition,
    integ: IntegratorConfig = IntegratorConfig(),
    zc: ZeroCrossingConfig = ZeroCrossingConfig(),
) -> Optional[float]:
    """Time at which the sampled flow leaves C (rule 2) or C minus D (rule 1).

    Returns ``None`` when every sample after the first is inside. Otherwise the
    crossing is bracketed by the last inside and first outside samples and
    refined by bisection, re-integrating a single step from the inside sample.
    """
    hit = _first_exit(times, states, signal.value, rule, system)
    if hit is None:
        return None
    if hit == 0:
        return 0.0
    t, _ = _refine(times[hit - 1], states[hit - 1], times[hit], signal.value, rule, system, integ, zc)
    return t


def _first_exit(times, states, u, rule, system) -> Optional[int]:
    rule = PriorityRule(rule)
    if rule is PriorityRule.JUMP and system.jump_membership(states[0], u):
        return 0
    for k in range(1, len(times)):
        if not _inside(system, rule, states[k], u):
            return k
    return None


def _refine(t_in, x_in, t_out, u, rule, system, integ, zc):
    """Bisection between an inside sample and an outside time; returns the inside end."""
    rule = PriorityRule(rule)
    lo, hi = float(t_in), float(t_out)
    x_lo = np.asarray(x_in, dtype=float)
    for _ in range(zc.max_bisections):
        if hi - lo <= zc.time_tolerance and abs(_crossing_value(system, rule, x_lo, u)) <= zc.value_tolerance:
            break
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        x_mid = integrate_step(system.flow_map, x_in, u, mid - t_in, integ.scheme)
        if _inside(system, rule, x_mid, u):
            lo, x_lo = mid, x_mid
        else:
            hi = mid
    return lo, x_lo


def continuous_simulator(
    system: SystemDefinition,
    rule,
    x0,
    signal: ConstantInputSignal,
    integ: IntegratorConfig = IntegratorConfig(),
    zc: ZeroCrossingConfig = ZeroCrossingConfig(),
) -> SolutionPair:
    """Maximal flow from ``x0`` under a constant input, on ``[0, t*] x {0}``.

    Integration runs to ``signal.duration`` unless the pair leaves C (rule 2)
    or C minus D (rule 1) first. Steps are of length ``integ.step`` except the
    last; a final step much shorter than ``integ.step`` is merged into the
    previous one.
    """
    rule = PriorityRule(rule)
    x0 = np.asarray(x0, dtype=float)
    u = signal.value
    if not system.flow_membership(x0, u):
        raise ValueError("initial pair not in flow set")
    if rule is PriorityRule.JUMP and system.jump_membership(x0, u):
        return SolutionPair.point(x0, u)

    h = integ.step
    times = [0.0]
    states = [x0]
    t_end = float(signal.duration)
    while times[-1] < t_end:
        k = len(times)
        t_next = min(k * h, t_end)
        if t_end - t_next < 1e-3 * h:
            t_next = t_end
        x_next = integrate_step(system.flow_map, states[-1], u, t_next - times[-1], integ.scheme)
        if not _inside(system, rule, x_next, u):
            t_hat, x_hat = _refine(times[-1], states[-1], t_next, u, rule, system, integ, zc)
            if t_hat > times[-1]:
                times.append(t_hat)
                states.append(x_hat)
            break
        times.append(t_next)
        states.append(x_next)

    _merge_short_tail(times, states, h)
    ts = np.array(times)
    xs = np.array(states)
    us = np.tile(u, (len(ts), 1))
    return SolutionPair.from_arrays([(ts, xs, us)])


def _merge_short_tail(times, states, step):
    """Drop the second-to-last sample when the last step is a sliver."""
    if len(times) >= 3 and times[-1] - times[-2] < 1e-3 * step:
        del times[-2]
        del states[-2]


def discrete_simulator(
    system: SystemDefinition,
    x0,
    u_d,
    problem: Optional[MotionPlanningProblem] = None,
) -> SolutionPair:
    """One jump from ``x0`` with input ``u_d``, on the domain ``{0} x {0, 1}``.

    The input after the jump carries no dynamics. It repeats ``u_d`` when a
    problem is given and that choice is safe; otherwise it is the zero vector.
    """
    x0 = np.asarray(x0, dtype=float)
    u_d = np.atleast_1d(np.asarray(u_d, dtype=float))
    if not system.jump_membership(x0, u_d):
        raise ValueError("initial pair not in jump set")
    images = system.jump_map(x0, u_d)
    if not images:
        raise ValueError("jump map is empty at the initial pair")
    x1 = np.asarray(images[0], dtype=float)
    after = np.zeros_like(u_d)
    if problem is not None:
        if not problem.unsafe_membership(x1, u_d):
            after = u_d
        elif problem.unsafe_membership(x1, after):
            after = problem.default_input()
    return SolutionPair.from_arrays(
        [
            ([0.0], x0[None, :], u_d[None, :]),
            ([0.0], x1[None, :], after[None, :]),
        ]
    )
