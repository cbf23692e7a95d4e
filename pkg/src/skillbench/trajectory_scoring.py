"""The three trajectory-following outcome measures.

Stability is the negated, normalized integral of the squared second
derivative of the speed profile:

    s = -(T^5 / v_peak^2) * integral |v''(t)|^2 dt

computed with central second differences (one-sided at the ends) and the
trapezoid rule.  Average speed divides each traversed segment's nominal
length by its dwell time; out-of-bounds percent counts flagged samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import OutcomeReport, Task, TrajectorySample
from .course import CourseSpec


@dataclass(frozen=True)
class SegmentRow:
    """Per-segment detail: dwell window, nominal length, speed, stability."""

    segment_id: int
    kind: str
    travel: str
    nominal_length: float
    n_samples: int
    t_enter: Optional[float] = None
    t_exit: Optional[float] = None
    v: Optional[float] = None
    s: Optional[float] = None
    note: str = "ok"

    def to_dict(self) -> dict:
        return {
            "segment_id": self.segment_id,
            "kind": self.kind,
            "travel": self.travel,
            "nominal_length": self.nominal_length,
            "n_samples": self.n_samples,
            "t_enter": self.t_enter,
            "t_exit": self.t_exit,
            "v": self.v,
            "s": self.s,
            "note": self.note,
        }


@dataclass(frozen=True)
class TrajectoryScore:
    s: Optional[float]
    v_avg: Optional[float]
    t_ob: Optional[float]
    per_segment: tuple[SegmentRow, ...]

    def report(self) -> OutcomeReport:
        return OutcomeReport(
            task=Task.TRAJECTORY_FOLLOWING,
            s=self.s,
            v_avg=self.v_avg,
            t_ob=self.t_ob,
            per_segment=tuple(r.to_dict() for r in self.per_segment),
        )


def _second_derivative(v: np.ndarray, dt: float) -> np.ndarray:
    d2 = np.empty_like(v)
    d2[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (dt * dt)
    d2[0] = (v[2] - 2.0 * v[1] + v[0]) / (dt * dt)
    d2[-1] = (v[-1] - 2.0 * v[-2] + v[-3]) / (dt * dt)
    return d2


def stability(trace: Sequence[TrajectorySample]) -> Optional[float]:
    """Dimensionless-jerk stability of the speed profile; always <= 0.

    Returns None (undefined) for traces shorter than 5 samples and 0.0 for
    an all-zero speed profile.
    """
    if len(trace) < 5:
        return None
    t = np.array([s.t for s in trace])
    v = np.array([s.v for s in trace])
    v_peak = float(np.max(np.abs(v)))
    if v_peak == 0.0:
        return 0.0
    dt = float(t[1] - t[0])
    total_time = float(t[-1] - t[0])
    d2 = _second_derivative(v, dt)
    integral = float(np.trapezoid(d2 * d2, dx=dt))
    if integral == 0.0:
        return 0.0
    return -(total_time**5) / (v_peak**2) * integral


def segment_runs(trace: Sequence[TrajectorySample], course: CourseSpec) -> dict[int, list[TrajectorySample]]:
    """Samples grouped by assigned segment id (unassigned samples dropped)."""
    groups: dict[int, list[TrajectorySample]] = {}
    for s in trace:
        if s.segment_id is not None:
            groups.setdefault(s.segment_id, []).append(s)
    return groups


def average_speed(
    trace: Sequence[TrajectorySample], course: CourseSpec
) -> tuple[Optional[float], list[SegmentRow]]:
    """Mean per-segment speed over traversed path segments.

    Per segment, v = nominal length / dwell time (Euclidean length for lines,
    r * sweep for arcs).  Spin zones have no translation and carry no speed;
    untraversed and zero-dwell segments are excluded and flagged.
    """
    groups = segment_runs(trace, course)
    rows: list[SegmentRow] = []
    speeds: list[float] = []
    for seg in course.segments:
        kind = type(seg.geometry).__name__.lower()
        run = groups.get(seg.id)
        base = dict(
            segment_id=seg.id,
            kind=kind,
            travel=seg.travel,
            nominal_length=seg.length,
            n_samples=len(run) if run else 0,
        )
        if not run:
            rows.append(SegmentRow(**base, note="untraversed"))
            continue
        t_enter, t_exit = run[0].t, run[-1].t
        base.update(t_enter=t_enter, t_exit=t_exit)
        seg_stability = stability(run)
        if seg.is_spin:
            rows.append(SegmentRow(**base, s=seg_stability, note="spin"))
            continue
        if t_exit <= t_enter:
            rows.append(SegmentRow(**base, s=seg_stability, note="zero_dwell"))
            continue
        v = seg.length / (t_exit - t_enter)
        speeds.append(v)
        rows.append(SegmentRow(**base, v=v, s=seg_stability))
    v_avg = sum(speeds) / len(speeds) if speeds else None
    return v_avg, rows


def out_of_bounds_percent(trace: Sequence[TrajectorySample]) -> Optional[float]:
    """Percent of samples whose footprint was out of bounds; None when empty.

    Sample counting at rate dt is equivalent to summing exit-to-reentry
    intervals with resolution one sample period per crossing.
    """
    if not trace:
        return None
    out = sum(1 for s in trace if not s.in_bounds)
    return 100.0 * out / len(trace)


def score_trajectory(
    trace: Sequence[TrajectorySample], course: CourseSpec
) -> TrajectoryScore:
    """All three measures plus per-segment rows for one annotated trace."""
    v_avg, rows = average_speed(trace, course)
    return TrajectoryScore(
        s=stability(trace),
        v_avg=v_avg,
        t_ob=out_of_bounds_percent(trace),
        per_segment=tuple(rows),
    )
