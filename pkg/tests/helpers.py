"""Shared generators and closed-form oracles for the test suite.

The oracles here use only textbook kinematics, never package code, so they
can check the package independently.
"""

from __future__ import annotations

import math

import numpy as np

from hyrrt.hybrid_time import HybridSignal, Segment, concatenate_pairs, reverse
from hyrrt.simulator import ConstantInputSignal, IntegratorConfig, continuous_simulator, discrete_simulator

GAMMA = 9.81
RESTITUTION = 0.8


# -- closed-form ballistic oracle -------------------------------------------

def fall_time(height: float) -> float:
    return math.sqrt(2.0 * height / GAMMA)


def ballistic(x0, t):
    """State of a ball in free flight after time ``t`` (no ground)."""
    return np.array([x0[0] + x0[1] * t - 0.5 * GAMMA * t * t, x0[1] - GAMMA * t])


def one_bounce_input(drop_height=15.0, target_height=10.0) -> float:
    """Surface input that turns a drop from rest into a rise to ``target_height``."""
    return math.sqrt(2 * GAMMA * target_height) - RESTITUTION * math.sqrt(2 * GAMMA * drop_height)


def analytic_plan(system, step=1e-4, flow_input=1.0, target_height=10.0, jump_input=None):
    """Drop from (15, 0), bounce once with the oracle input, rise to rest at ``target_height``."""
    u = one_bounce_input(15.0, target_height) if jump_input is None else jump_input
    integ = IntegratorConfig("rk4", step)
    fall = continuous_simulator(system, 2, [15.0, 0.0], ConstantInputSignal([flow_input], 2.0), integ)
    jump = discrete_simulator(system, fall.final_state(), [u])
    rise_time = math.sqrt(2 * target_height / GAMMA)
    rise = continuous_simulator(system, 2, jump.final_state(), ConstantInputSignal([flow_input], rise_time), integ)
    plan = concatenate_pairs(concatenate_pairs(fall, jump), rise)
    return plan, u


# -- random simulated pairs -------------------------------------------------

def random_state_in_flow_set(rng, height=(0.0, 6.0), speed=12.0):
    return np.array([rng.uniform(*height), rng.uniform(-speed, speed)])


def simulate_random_pair(system, rng, n_pieces=4, x0=None, max_duration=1.0, step=1e-3, jump_prob=0.5):
    """Concatenate ``n_pieces`` random flows and jumps simulated on ``system``.

    Flows use a random constant input and duration; jumps are taken whenever
    the state is in D and a coin flip (or a stuck flow) asks for one.
    """
    x = random_state_in_flow_set(rng) if x0 is None else np.asarray(x0, dtype=float)
    lo, hi = (b[0] for b in system.jump_input_range)
    integ = IntegratorConfig("rk4", step)
    pair = None
    for _ in range(n_pieces):
        piece = None
        u_jump = _admissible_jump_input(system, x, rng, lo, hi)
        if u_jump is not None and rng.random() < jump_prob:
            piece = discrete_simulator(system, x, [u_jump])
        else:
            u = rng.uniform(lo, hi)
            if system.flow_membership(x, [u]):
                piece = continuous_simulator(
                    system, 2, x, ConstantInputSignal([u], rng.uniform(0.05, max_duration)), integ
                )
            if (piece is None or piece.is_trivial()) and u_jump is not None:
                piece = discrete_simulator(system, x, [u_jump])
        if piece is None or piece.is_trivial():
            break
        pair = piece if pair is None else concatenate_pairs(pair, piece)
        x = pair.final_state()
    if pair is None:
        u = rng.uniform(lo, hi)
        pair = continuous_simulator(system, 2, x, ConstantInputSignal([u], 0.1), integ)
    return pair


def _admissible_jump_input(system, x, rng, lo, hi):
    for _ in range(16):
        u = rng.uniform(lo, hi)
        if system.jump_membership(x, [u]):
            return u
    # the backward ball only admits inputs up to the current speed
    if system.jump_state_membership(x):
        u = rng.uniform(0.0, min(max(x[1], 0.0), hi))
        if system.jump_membership(x, [u]):
            return u
    return None


def random_arc_pair_for_closeness(rng, system, scale=0.02, offset=0.02):
    """An arc and a time-stretched, shifted copy of it on the same number of jumps."""
    pair = simulate_random_pair(system, rng, n_pieces=int(rng.integers(1, 5)), max_duration=0.5)
    a = pair.arc
    kappa = 1.0 + rng.uniform(-scale, scale)
    shift = rng.uniform(-offset, offset, size=a.dim)
    b = HybridSignal([Segment(s.j, s.times * kappa, s.values + shift) for s in a.segments])
    return a, b


def concatenable_pairs(system, rng, **kwargs):
    """Two simulated pairs where the second starts at the end of the first."""
    first = simulate_random_pair(system, rng, **kwargs)
    second = simulate_random_pair(system, rng, x0=first.final_state(), **kwargs)
    return first, second


def forward_backward_pairs(system, backward_system, rng):
    """``(psi1, psi2)`` with psi1 on H, psi2 on the backward system, both ending at one state.

    psi2 is simulated on the backward system from a random state; psi1 is the
    reversal of a backward simulation started from psi2's final state, so it
    is a pair on H that ends there.
    """
    psi2 = simulate_random_pair(backward_system, rng, n_pieces=int(rng.integers(1, 4)))
    chi = simulate_random_pair(backward_system, rng, x0=psi2.final_state(), n_pieces=int(rng.integers(1, 4)))
    return reverse(chi), psi2


def stretched_copy(arc, kappa, shift):
    """The arc with its time axis scaled by ``kappa`` and its values shifted by ``shift``."""
    return HybridSignal([Segment(s.j, s.times * kappa, s.values + shift) for s in arc.segments])


def closeness_level(a, b, levels=(0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0)):
    """Smallest ``eps`` in ``levels`` for which the arcs are (tau, eps)-close, with tau = max(T + J)."""
    from hyrrt.hybrid_time import are_close

    tau = max(sum(a.max_point), sum(b.max_point))
    for eps in levels:
        if are_close(a, b, tau, eps):
            return tau, eps
    return tau, None
