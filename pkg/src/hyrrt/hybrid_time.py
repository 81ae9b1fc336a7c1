"""Hybrid time domains and signals sampled on them.

A signal is stored as one sample grid per jump index ``j``. Both endpoints of
every interval are stored, so at a jump instant ``t_j`` the two values
``(t_j, j-1)`` and ``(t_j, j)`` live in neighbouring segments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

#: Absolute tolerance (seconds) when matching interval endpoints.
TIME_TOL = 1e-9


class HybridTime(NamedTuple):
    t: float
    j: int


class Interval(NamedTuple):
    j: int
    t_start: float
    t_end: float


def is_hybrid_time_domain(intervals: Sequence[Sequence[float]], tol: float = TIME_TOL) -> bool:
    """Check that ``[(j, t_start, t_end), ...]`` describes a compact hybrid time domain."""
    if len(intervals) == 0:
        return False
    prev_end = 0.0
    for k, item in enumerate(intervals):
        if len(item) != 3:
            return False
        j, t0, t1 = item
        if int(j) != j or int(j) != k:
            return False
        if not (np.isfinite(t0) and np.isfinite(t1)):
            return False
        if t0 < -tol or t1 < t0 - tol:
            return False
        if abs(t0 - prev_end) > tol:
            return False
        prev_end = t1
    return True


def max_point(intervals: Sequence[Sequence[float]]) -> HybridTime:
    """Return ``max dom`` of a compact domain given as an interval list."""
    if len(intervals) == 0:
        raise ValueError("empty domain")
    j, _, t_end = intervals[-1]
    return HybridTime(float(t_end), int(j))


@dataclass(frozen=True, eq=False)
class Segment:
    """Samples of a signal on the interval ``[times[0], times[-1]] x {j}``."""

    j: int
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(len(times), -1)
        if len(times) == 0:
            raise ValueError("segment needs at least one sample")
        if values.shape[0] != len(times):
            raise ValueError("segment times and values disagree in length")
        if len(times) > 1 and np.any(np.diff(times) <= 0.0):
            raise ValueError("segment sample times must strictly increase")
        times.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def has_interior(self) -> bool:
        return self.t_end > self.t_start

    def at(self, t: float) -> np.ndarray:
        """Linear interpolation of the samples at time ``t`` (clamped to the interval)."""
        if len(self.times) == 1:
            return self.values[0].copy()
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(max(k, 0), len(self.times) - 2)
        t0, t1 = self.times[k], self.times[k + 1]
        w = (t - t0) / (t1 - t0)
        w = min(max(w, 0.0), 1.0)
        return (1.0 - w) * self.values[k] + w * self.values[k + 1]


class HybridSignal:
    """A function on a compact hybrid time domain, stored as per-interval samples."""

    __slots__ = ("segments",)

    def __init__(self, segments: Sequence[Segment]):
        segments = tuple(segments)
        if not segments:
            raise ValueError("empty domain")
        dim = segments[0].values.shape[1]
        for k, seg in enumerate(segments):
            if seg.j != k:
                raise ValueError(f"segment {k} carries jump index {seg.j}")
            if seg.values.shape[1] != dim:
                raise ValueError("segments disagree on value dimension")
            if k > 0 and abs(seg.t_start - segments[k - 1].t_end) > TIME_TOL:
                raise ValueError(
                    f"interval {k} starts at {seg.t_start}, previous ends at {segments[k - 1].t_end}"
                )
        if segments[0].t_start != 0.0:
            raise ValueError("hybrid time domains start at t = 0")
        self.segments = segments

    @classmethod
    def from_arrays(cls, pieces: Sequence[tuple]) -> "HybridSignal":
        """Build from ``[(times, values), ...]`` with ``j`` given by position."""
        return cls([Segment(j, t, v) for j, (t, v) in enumerate(pieces)])

    @classmethod
    def constant(cls, value, intervals: Sequence[Sequence[float]], n_samples: int = 2) -> "HybridSignal":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        segs = []
        for j, t0, t1 in intervals:
            ts = np.array([t0]) if t1 == t0 else np.linspace(t0, t1, max(n_samples, 2))
            segs.append(Segment(int(j), ts, np.tile(value, (len(ts), 1))))
        return cls(segs)

    @property
    def dim(self) -> int:
        return self.segments[0].values.shape[1]

    @property
    def domain(self) -> list[Interval]:
        return [Interval(s.j, s.t_start, s.t_end) for s in self.segments]

    @property
    def max_point(self) -> HybridTime:
        last = self.segments[-1]
        return HybridTime(last.t_end, last.j)

    @property
    def n_samples(self) -> int:
        return sum(len(s.times) for s in self.segments)

    def initial(self) -> np.ndarray:
        return self.segments[0].values[0].copy()

    def final(self) -> np.ndarray:
        return self.segments[-1].values[-1].copy()

    def contains(self, t: float, j: int, tol: float = TIME_TOL) -> bool:
        if j < 0 or j >= len(self.segments):
            return False
        seg = self.segments[j]
        return seg.t_start - tol <= t <= seg.t_end + tol

    def __call__(self, t: float, j: int) -> np.ndarray:
        if not self.contains(t, j):
            raise ValueError(f"({t}, {j}) is outside the domain")
        return self.segments[j].at(t)

    def samples(self):
        """Yield ``(t, j, value)`` for every stored sample in hybrid-time order."""
        for seg in self.segments:
            for t, v in zip(seg.times, seg.values):
                yield float(t), seg.j, v

    def is_purely_continuous(self) -> bool:
        return len(self.segments) == 1 and self.segments[0].has_interior

    def is_purely_discrete(self) -> bool:
        return len(self.segments) > 1 and all(not s.has_interior for s in self.segments)

    def is_trivial(self) -> bool:
        return len(self.segments) == 1 and not self.segments[0].has_interior

    def same_grid(self, other: "HybridSignal") -> bool:
        if len(self.segments) != len(other.segments):
            return False
        return all(
            a.times.shape == b.times.shape and np.array_equal(a.times, b.times)
            for a, b in zip(self.segments, other.segments)
        )

    def __repr__(self):
        T, J = self.max_point
        return f"HybridSignal(dim={self.dim}, T={T:.6g}, J={J}, samples={self.n_samples})"


# Arcs and inputs share a representation; the aliases document intent.
HybridArc = HybridSignal
HybridInput = HybridSignal


def concatenate(first: HybridSignal, second: HybridSignal) -> HybridSignal:
    """Glue ``second`` onto the end of ``first``.

    The value of ``first`` at its last point is replaced by ``second(0, 0)``.
    Signals are always compact here; ``first`` must have a finite maximum.
    """
    if not isinstance(first, HybridSignal) or not np.isfinite(first.max_point.t):
        raise ValueError("cannot concatenate onto non-compact signal")
    if first.dim != second.dim:
        raise ValueError("signals disagree on value dimension")
    T, J = first.max_point
    segs = list(first.segments[:-1])
    last = first.segments[-1]
    head = second.segments[0]
    times = np.concatenate([last.times[:-1], head.times + T])
    values = np.concatenate([last.values[:-1], head.values])
    # float rounding of head.times + T can collide with the last kept sample
    if len(last.times) > 1 and len(head.times) > 0 and times[len(last.times) - 1] <= times[len(last.times) - 2]:
        times[len(last.times) - 1] = np.nextafter(times[len(last.times) - 2], np.inf)
    segs.append(Segment(J, times, values))
    for seg in second.segments[1:]:
        segs.append(Segment(seg.j + J, seg.times + T, seg.values))
    return HybridSignal(segs)


def truncate_translate(signal: HybridSignal, start: Sequence, stop: Sequence) -> HybridSignal:
    """Restrict ``signal`` to hybrid times between ``start`` and ``stop`` and shift to the origin."""
    T1, J1 = float(start[0]), int(start[1])
    T2, J2 = float(stop[0]), int(stop[1])
    if not (signal.contains(T1, J1) and signal.contains(T2, J2)) or T1 > T2 or J1 > J2:
        raise ValueError("truncation bounds outside domain")
    segs = []
    prev_end = 0.0
    for j in range(J1, J2 + 1):
        seg = signal.segments[j]
        lo = max(seg.t_start, T1) if j == J1 else seg.t_start
        hi = min(seg.t_end, T2) if j == J2 else seg.t_end
        if hi - lo <= TIME_TOL:
            ts = np.array([lo])
            vs = _value_near(seg, lo)[None, :]
        else:
            keep = (seg.times > lo + TIME_TOL) & (seg.times < hi - TIME_TOL)
            ts = np.concatenate([[lo], seg.times[keep], [hi]])
            vs = np.concatenate([_value_near(seg, lo)[None, :], seg.values[keep], _value_near(seg, hi)[None, :]])
        ts = ts - T1
        ts[0] = prev_end
        if len(ts) > 1 and ts[1] <= ts[0]:
            ts[1] = np.nextafter(ts[0], np.inf)
        prev_end = float(ts[-1])
        segs.append(Segment(j - J1, ts, vs))
    return HybridSignal(segs)


def _value_near(seg: Segment, t: float) -> np.ndarray:
    """Stored sample value when ``t`` matches one within tolerance, else interpolation."""
    k = int(np.argmin(np.abs(seg.times - t)))
    if abs(seg.times[k] - t) <= TIME_TOL:
        return seg.values[k]
    return seg.at(t)


def reflect(signal: HybridSignal) -> HybridSignal:
    """Reflect a signal through its maximal point: ``s'(t, j) = s(T - t, J - j)``."""
    T, J = signal.max_point
    segs = []
    prev_end = 0.0
    for seg in reversed(signal.segments):
        ts = (T - seg.times)[::-1].copy()
        ts[0] = prev_end
        if len(ts) > 1 and ts[1] <= ts[0]:
            ts[1] = np.nextafter(ts[0], np.inf)
        prev_end = float(ts[-1])
        segs.append(Segment(J - seg.j, ts, seg.values[::-1]))
    return HybridSignal(segs)


@dataclass(frozen=True, eq=False)
class SolutionPair:
    """A hybrid arc and a hybrid input sharing one sample grid."""

    arc: HybridSignal
    input: HybridSignal

    def __post_init__(self):
        if not self.arc.same_grid(self.input):
            raise ValueError("arc and input must share the same domain and sample grid")

    @classmethod
    def from_arrays(cls, pieces: Sequence[tuple]) -> "SolutionPair":
        """Build from ``[(times, states, inputs), ...]``, one tuple per jump index."""
        arc = HybridSignal.from_arrays([(t, x) for t, x, _ in pieces])
        inp = HybridSignal.from_arrays([(t, u) for t, _, u in pieces])
        return cls(arc, inp)

    @classmethod
    def point(cls, x, u) -> "SolutionPair":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return cls.from_arrays([([0.0], x[None, :], u[None, :])])

    @property
    def domain(self) -> list[Interval]:
        return self.arc.domain

    @property
    def max_point(self) -> HybridTime:
        return self.arc.max_point

    @property
    def segments(self):
        """``[(j, times, states, inputs), ...]``."""
        return [(a.j, a.times, a.values, b.values) for a, b in zip(self.arc.segments, self.input.segments)]

    def samples(self):
        """Yield ``(t, j, x, u)`` for every stored sample."""
        for (t, j, x), (_, _, u) in zip(self.arc.samples(), self.input.samples()):
            yield t, j, x, u

    def initial_state(self) -> np.ndarray:
        return self.arc.initial()

    def final_state(self) -> np.ndarray:
        return self.arc.final()

    def is_trivial(self) -> bool:
        return self.arc.is_trivial()

    def is_purely_continuous(self) -> bool:
        return self.arc.is_purely_continuous()

    def is_purely_discrete(self) -> bool:
        return self.arc.is_purely_discrete()

    def __repr__(self):
        T, J = self.max_point
        return f"SolutionPair(T={T:.6g}, J={J}, samples={self.arc.n_samples})"


def concatenate_pairs(first: SolutionPair, second: SolutionPair) -> SolutionPair:
    return SolutionPair(concatenate(first.arc, second.arc), concatenate(first.input, second.input))


def truncate_pair(pair: SolutionPair, start, stop) -> SolutionPair:
    return SolutionPair(truncate_translate(pair.arc, start, stop), truncate_translate(pair.input, start, stop))


def reverse(pair: SolutionPair) -> SolutionPair:
    """Reversal of a compact solution pair.

    The arc is reflected through ``max dom``. A stored input sample acts on
    the step that follows it, so reflected flow inputs move one sample to the
    left. Where the reversed pair jumps, the input is the one of the jump it
    undoes, ``u'(t, j) = u(T - t, J - j - 1)``. Remaining free boundary values
    take the continuous extension (the neighbouring interior sample).
    """
    if not np.isfinite(pair.max_point.t):
        raise ValueError("cannot reverse a non-compact pair")
    arc = reflect(pair.arc)
    flipped = reflect(pair.input)
    orig = pair.input.segments
    J = len(orig) - 1
    segs = []
    for seg in flipped.segments:
        vals = seg.values.copy()
        if seg.has_interior:
            vals[:-1] = seg.values[1:]
            vals[-1] = vals[-2]
        if seg.j < J:
            vals[-1] = orig[J - seg.j - 1].values[-1]
        segs.append(Segment(seg.j, seg.times, vals))
    return SolutionPair(arc, HybridSignal(segs))


def are_close(a: HybridSignal, b: HybridSignal, tau: float, eps: float) -> bool:
    """(tau, eps)-closeness of two arcs, decided on their sample grids.

    Every sample of one arc with ``t + j <= tau`` needs a witness time ``s`` on
    the same jump index of the other arc with ``|t - s| < eps`` and
    ``|a(t, j) - b(s, j)| < eps``; the other arc is linearly interpolated
    between its samples when searching for the witness.
    """
    if tau <= 0 or eps <= 0:
        raise ValueError("tau and eps must be positive")
    return _one_sided_close(a, b, tau, eps) and _one_sided_close(b, a, tau, eps)


def _one_sided_close(a: HybridSignal, b: HybridSignal, tau: float, eps: float) -> bool:
    for seg in a.segments:
        mask = seg.times + seg.j <= tau
        if not np.any(mask):
            continue
        if seg.j >= len(b.segments):
            return False
        other = b.segments[seg.j]
        ts, vs = seg.times[mask], seg.values[mask]
        # cheap pass: the witness at the clamped same time settles most samples
        s = np.clip(ts, other.t_start, other.t_end)
        if len(other.times) == 1:
            quick = np.linalg.norm(vs - other.values[0], axis=1)
        else:
            near = np.column_stack([np.interp(s, other.times, other.values[:, i]) for i in range(other.values.shape[1])])
            quick = np.linalg.norm(vs - near, axis=1)
        open_ = (np.abs(ts - s) >= eps) | (quick >= eps)
        if not np.any(open_):
            continue
        dist = _witness_distances(other, ts[open_], vs[open_], eps)
        if np.any(dist >= eps):
            return False
    return True


def _witness_distances(seg: Segment, ts, vs, eps: float) -> np.ndarray:
    """For each ``(t, v)``, the minimum of ``|v - seg(s)|`` over ``s`` with ``|t - s| < eps``.

    ``seg`` is linearly interpolated between samples; each sample piece is
    clipped to the time window before taking the point-to-segment distance.
    """
    st, sv = seg.times, seg.values
    lo, hi = ts - eps, ts + eps
    out = np.full(len(ts), np.inf)
    reach = (st[-1] > lo) & (st[0] < hi)
    if len(st) == 1:
        out[reach] = np.linalg.norm(vs[reach] - sv[0], axis=1)
        return out
    idx = np.flatnonzero(reach)
    if len(idx) == 0:
        return out
    lo, hi, vs = lo[idx], hi[idx], vs[idx]
    n_pieces = len(st) - 1
    k0 = np.clip(np.searchsorted(st, lo, side="right") - 1, 0, n_pieces - 1)
    k1 = np.clip(np.searchsorted(st, hi, side="left"), 1, n_pieces)
    width = int(np.max(k1 - k0))
    k = k0[:, None] + np.arange(width)[None, :]
    valid = k < k1[:, None]
    k = np.minimum(k, n_pieces - 1)
    t0, t1 = st[k], st[k + 1]
    s0 = np.maximum(t0, lo[:, None])
    s1 = np.minimum(t1, hi[:, None])
    valid &= s1 >= s0
    span = t1 - t0
    x0, dx = sv[k], sv[k + 1] - sv[k]
    p0 = x0 + ((s0 - t0) / span)[..., None] * dx
    p1 = x0 + ((s1 - t0) / span)[..., None] * dx
    d = p1 - p0
    rel = vs[:, None, :] - p0
    dd = np.einsum("ijk,ijk->ij", d, d)
    num = np.einsum("ijk,ijk->ij", rel, d)
    lam = np.clip(np.divide(num, dd, out=np.zeros_like(dd), where=dd > 0), 0.0, 1.0)
    dist = np.linalg.norm(rel - lam[..., None] * d, axis=2)
    out[idx] = np.min(np.where(valid, dist, np.inf), axis=1)
    return out
