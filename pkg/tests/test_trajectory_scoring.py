import math

import numpy as np
import pytest

from skillbench.course import annotate_trace, build_curved_course, build_square_course
from skillbench.model import CommandVector, Pose, TrajectorySample
from skillbench.sim import SimParams
from skillbench.trajectory_scoring import (
    average_speed,
    out_of_bounds_percent,
    score_trajectory,
    stability,
)


def _speed_trace(ts, vs, segment_id=None, in_bounds=True):
    return [
        TrajectorySample(
            t=t,
            pose=Pose(0.0, 0.0, 0.0),
            command=CommandVector(t, 0.0, v),
            v=v,
            segment_id=segment_id,
            in_bounds=in_bounds,
        )
        for t, v in zip(ts, vs)
    ]


def test_constant_speed_is_perfectly_stable():
    ts = [k * 0.02 for k in range(500)]
    trace = _speed_trace(ts, [1.0] * 500)
    assert stability(trace) == 0.0


def test_zero_speed_guard():
    ts = [k * 0.02 for k in range(100)]
    trace = _speed_trace(ts, [0.0] * 100)
    assert stability(trace) == 0.0


def test_too_few_samples_is_undefined():
    ts = [k * 0.02 for k in range(4)]
    assert stability(_speed_trace(ts, [1.0] * 4)) is None


def test_sinusoid_matches_analytic_integral():
    # v(t) = sin(2*pi*t) on [0, 1]:  integral |v''|^2 dt = (2*pi)^4 / 2,
    # v_peak = 1, T = 1  ->  s = -(2*pi)^4 / 2.
    dt = 0.001
    ts = [k * dt for k in range(1001)]
    vs = [math.sin(2.0 * math.pi * t) for t in ts]
    s = stability(_speed_trace(ts, vs))
    expected = -((2.0 * math.pi) ** 4) / 2.0
    assert s == pytest.approx(expected, rel=0.02)


def test_time_dilation_scaling_law():
    # The paper's T^5 normalization makes s scale as k^2 under "same path,
    # k-times slower": verify the exact self-similarity of the implementation.
    dt = 0.001
    ts = [i * dt for i in range(2001)]
    vs = [1.0 + 0.3 * math.sin(2.0 * math.pi * t / ts[-1]) for t in ts]
    s1 = stability(_speed_trace(ts, vs))
    for k in (2.0, 3.0):
        ts_k = [t * k for t in ts]
        vs_k = [v / k for v in vs]
        s_k = stability(_speed_trace(ts_k, vs_k))
        assert s_k == pytest.approx(k * k * s1, rel=1e-6)


def test_stability_is_never_positive():
    import random

    rng = random.Random(1)
    ts = [k * 0.02 for k in range(200)]
    vs = [rng.uniform(0.0, 1.0) for _ in ts]
    assert stability(_speed_trace(ts, vs)) <= 0.0


def test_average_speed_straight_segment():
    course = build_square_course(side=10.0)
    # 10 m bottom side (id 0) traversed in 5 s
    ts = [k * 0.05 for k in range(101)]
    trace = [
        TrajectorySample(
            t=t,
            pose=Pose(2.0 * t, 0.0, 0.0),
            command=CommandVector(t, 0.0, 1.0),
            v=2.0,
            segment_id=0,
            in_bounds=True,
        )
        for t in ts
    ]
    v_avg, rows = average_speed(trace, course)
    row0 = rows[0]
    assert row0.v == pytest.approx(10.0 / 5.0)
    assert v_avg == pytest.approx(2.0)


def test_average_speed_arc_segment():
    course = build_curved_course(r_long=6.0, r_small=2.0)
    # small arc (id 1): length 2 * pi/3; traverse it in exactly that many seconds
    seg = course.segments[1]
    dwell = seg.length
    ts = [k * 0.01 for k in range(int(dwell / 0.01) + 1)]
    trace = [
        TrajectorySample(
            t=t,
            pose=Pose(0.0, 0.0, 0.0),
            command=CommandVector(t, 0.0, 1.0),
            v=1.0,
            segment_id=1,
            in_bounds=True,
        )
        for t in ts
    ]
    v_avg, rows = average_speed(trace, course)
    row1 = next(r for r in rows if r.segment_id == 1)
    assert row1.v == pytest.approx(seg.length / ts[-1], rel=1e-6)
    assert v_avg == pytest.approx(row1.v)


def test_untraversed_segments_are_flagged_and_excluded():
    course = build_square_course()
    ts = [k * 0.05 for k in range(40)]
    trace = [
        TrajectorySample(
            t=t, pose=Pose(t, 0.0, 0.0), command=CommandVector(t, 0.0, 1.0),
            v=1.0, segment_id=0, in_bounds=True,
        )
        for t in ts
    ]
    v_avg, rows = average_speed(trace, course)
    notes = {r.segment_id: r.note for r in rows}
    assert notes[0] == "ok"
    assert all(notes[s.id] == "untraversed" for s in course.segments if s.id != 0)


def test_zero_dwell_segment_is_skipped_with_warning():
    course = build_square_course()
    trace = [
        TrajectorySample(
            t=1.0, pose=Pose(5.0, 0.0, 0.0), command=CommandVector(1.0, 0.0, 1.0),
            v=1.0, segment_id=0, in_bounds=True,
        )
    ]
    v_avg, rows = average_speed(trace, course)
    assert rows[0].note == "zero_dwell"
    assert rows[0].v is None
    assert v_avg is None


def test_out_of_bounds_trivial_cases():
    ts = [k * 0.02 for k in range(100)]
    assert out_of_bounds_percent(_speed_trace(ts, [1.0] * 100, in_bounds=True)) == 0.0
    assert out_of_bounds_percent(_speed_trace(ts, [1.0] * 100, in_bounds=False)) == 100.0
    assert out_of_bounds_percent([]) is None


def test_out_of_bounds_scripted_interval():
    # Out of bounds during (4, 6] of a 10 s trace sampled at 50 Hz: 20 percent.
    dt = 0.02
    n = 500
    trace = []
    for k in range(1, n + 1):
        t = k * dt
        trace.append(
            TrajectorySample(
                t=t, pose=Pose(0.0, 0.0, 0.0), command=CommandVector(t, 0.0, 1.0),
                v=1.0, segment_id=0, in_bounds=not (4.0 < t <= 6.0),
            )
        )
    t_ob = out_of_bounds_percent(trace)
    assert t_ob == pytest.approx(20.0, abs=0.4)  # one sample period per crossing


def test_sample_counting_equals_interval_formulation():
    import random

    rng = random.Random(3)
    dt = 0.02
    n = 1000
    flags = []
    state = True
    for _ in range(n):
        if rng.random() < 0.01:
            state = not state
        flags.append(state)
    trace = [
        TrajectorySample(
            t=(k + 1) * dt, pose=Pose(0.0, 0.0, 0.0),
            command=CommandVector((k + 1) * dt, 0.0, 1.0),
            v=1.0, segment_id=0, in_bounds=flags[k],
        )
        for k in range(n)
    ]
    # interval formulation: sum of (reentry - exit) times over crossings
    total = n * dt
    out_time = 0.0
    k = 0
    while k < n:
        if not flags[k]:
            j = k
            while j < n and not flags[j]:
                j += 1
            out_time += (j - k) * dt
            k = j
        else:
            k += 1
    crossings = sum(1 for a, b in zip(flags, flags[1:]) if a != b) + (0 if flags[0] else 1)
    expected = 100.0 * out_time / total
    got = out_of_bounds_percent(trace)
    assert abs(got - expected) <= 100.0 * (crossings * dt) / total + 1e-9


def test_score_trajectory_closed_loop_straight_run():
    # constant-command straight run: average speed equals v_max * |uy|
    course = build_square_course()
    params = SimParams(v_max=1.0, dt=0.02)
    from skillbench.sim import run_trace

    uy = 0.8
    commands = [CommandVector(k * 0.02, 0.0, uy) for k in range(625)]  # 12.5 s -> 10 m
    trace = annotate_trace(
        run_trace(course.start_pose, commands, params), course, params.footprint
    )
    ts = score_trajectory(trace, course)
    row0 = next(r for r in ts.per_segment if r.segment_id == 0)
    assert row0.v == pytest.approx(uy * params.v_max, rel=0.01)
    assert ts.t_ob == 0.0
    assert ts.s <= 0.0
