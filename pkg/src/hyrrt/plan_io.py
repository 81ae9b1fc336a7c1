"""JSON motion-plan files and flat CSV trajectories.

Floats are written by the standard ``json`` module, which emits the shortest
decimal string that parses back to the same double, so files round-trip
bit-exactly.
"""

from __future__ import annotations

import csv
import json
from typing import Optional

import numpy as np

from .hybrid_time import SolutionPair, is_hybrid_time_domain

PLAN_VERSION = 1


class PlanFormatError(ValueError):
    pass


def plan_to_dict(pair: SolutionPair, system: str, metadata: Optional[dict] = None) -> dict:
    segments = pair.segments
    flow_segments = []
    for j, ts, xs, us in segments:
        flow_segments.append(
            {
                "j": int(j),
                "samples": [
                    {"t": float(t), "x": [float(v) for v in x], "u": [float(v) for v in u]}
                    for t, x, u in zip(ts, xs, us)
                ],
            }
        )
    jumps = []
    for (j, ts, xs, us), (_, _, xs_next, _) in zip(segments[:-1], segments[1:]):
        jumps.append(
            {
                "t": float(ts[-1]),
                "j": int(j),
                "x_before": [float(v) for v in xs[-1]],
                "x_after": [float(v) for v in xs_next[0]],
                "u": [float(v) for v in us[-1]],
            }
        )
    return {
        "version": PLAN_VERSION,
        "system": system,
        "domain": [{"j": int(iv.j), "t_start": float(iv.t_start), "t_end": float(iv.t_end)} for iv in pair.domain],
        "flow_segments": flow_segments,
        "jumps": jumps,
        "metadata": dict(metadata or {}),
    }


def write_plan(path, pair: SolutionPair, system: str, metadata: Optional[dict] = None) -> None:
    doc = plan_to_dict(pair, system, metadata)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, allow_nan=False)
        fh.write("\n")


def _require(cond, message):
    if not cond:
        raise PlanFormatError(message)


def plan_from_dict(doc) -> SolutionPair:
    """Rebuild a solution pair, checking the document against the plan schema."""
    _require(isinstance(doc, dict), "plan file must hold a JSON object")
    _require(doc.get("version") == PLAN_VERSION, f"unsupported plan version {doc.get('version')!r}")
    for key in ("system", "domain", "flow_segments", "jumps"):
        _require(key in doc, f"missing field {key!r}")
    try:
        domain = [(int(d["j"]), float(d["t_start"]), float(d["t_end"])) for d in doc["domain"]]
        pieces = []
        for k, seg in enumerate(doc["flow_segments"]):
            _require(int(seg["j"]) == k, f"flow_segments[{k}] has j={seg['j']}")
            samples = seg["samples"]
            _require(len(samples) > 0, f"flow_segments[{k}] has no samples")
            ts = np.array([s["t"] for s in samples], dtype=float)
            xs = np.array([s["x"] for s in samples], dtype=float)
            us = np.array([s["u"] for s in samples], dtype=float)
            _require(xs.ndim == 2 and us.ndim == 2, f"flow_segments[{k}] has ragged vectors")
            pieces.append((ts, xs, us))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, PlanFormatError):
            raise
        raise PlanFormatError(f"malformed plan: {exc}") from None

    _require(is_hybrid_time_domain(domain), "domain is not a hybrid time domain")
    _require(len(domain) == len(pieces), "domain and flow_segments disagree on the number of intervals")
    for (j, t0, t1), (ts, _, _) in zip(domain, pieces):
        _require(ts[0] == t0 and ts[-1] == t1, f"samples of interval {j} do not span [{t0}, {t1}]")
    jumps = doc["jumps"]
    _require(len(jumps) == len(pieces) - 1, "jumps do not match the domain")
    for k, jump in enumerate(jumps):
        try:
            ok = (
                int(jump["j"]) == k
                and float(jump["t"]) == pieces[k][0][-1]
                and np.array_equal(np.asarray(jump["x_before"], dtype=float), pieces[k][1][-1])
                and np.array_equal(np.asarray(jump["x_after"], dtype=float), pieces[k + 1][1][0])
                and np.array_equal(np.asarray(jump["u"], dtype=float), pieces[k][2][-1])
            )
        except (KeyError, TypeError, ValueError):
            ok = False
        _require(ok, f"jumps[{k}] is inconsistent with flow_segments")
    try:
        return SolutionPair.from_arrays(pieces)
    except ValueError as exc:
        raise PlanFormatError(f"malformed plan: {exc}") from None


def read_plan(path) -> tuple[SolutionPair, dict]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise PlanFormatError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise PlanFormatError(f"{path} is not valid JSON: {exc}") from None
    return plan_from_dict(doc), doc


def write_trajectory_csv(path, pair: SolutionPair) -> None:
    """Rows ``t, j, x_1..x_n, u_1..u_m`` for every sample; a jump instant appears twice."""
    n = pair.arc.dim
    m = pair.input.dim
    header = ["t", "j"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{i + 1}" for i in range(m)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, j, x, u in pair.samples():
            writer.writerow([repr(float(t)), j] + [repr(float(v)) for v in x] + [repr(float(v)) for v in u])
