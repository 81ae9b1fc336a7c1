"""Input library: constant flow signals of bounded duration and jump input values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulator import ConstantInputSignal


def _box(box) -> tuple:
    lo, hi = box
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape or lo.ndim != 1 or len(lo) == 0:
        raise ValueError("box bounds must be vectors of equal length")
    if np.any(hi < lo) or not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
        raise ValueError(f"empty or unbounded box [{lo}, {hi}]")
    lo.flags.writeable = False
    hi.flags.writeable = False
    return lo, hi


@dataclass(frozen=True)
class InputLibrary:
    """Constant flow inputs on ``[0, t_m]`` with ``t_m <= t_max`` and values in ``flow_box``;
    jump inputs in ``jump_box``. Boxes are ``(lower, upper)`` vector pairs."""

    t_max: float
    flow_box: tuple
    jump_box: tuple

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        object.__setattr__(self, "flow_box", _box(self.flow_box))
        object.__setattr__(self, "jump_box", _box(self.jump_box))


def build_library(t_max: float, flow_box, jump_box) -> InputLibrary:
    """Library whose flow inputs are constant signals; scalar bounds are accepted."""
    return InputLibrary(float(t_max), flow_box, jump_box)


def sample_flow_signal(library: InputLibrary, rng: np.random.Generator) -> ConstantInputSignal:
    """Duration uniform on ``(0, t_max]`` and value uniform on the flow box."""
    duration = library.t_max * (1.0 - rng.random())
    lo, hi = library.flow_box
    value = lo + (hi - lo) * rng.random(lo.shape)
    return ConstantInputSignal(value, duration)


def sample_jump_value(library: InputLibrary, rng: np.random.Generator) -> np.ndarray:
    lo, hi = library.jump_box
    return lo + (hi - lo) * rng.random(lo.shape)
