"""Record a scripted engine session into a fixture for the UI loopback test.

The fixture holds the deterministic event log (ticks + client messages), the
engine's outbound message stream, and the final summary.  Replaying the same
event log through the engine reproduces the outbound stream bit-for-bit (the
engine's own replay test pins that); the UI test asserts that what the
screens display matches these messages verbatim.

Run from the repo root after changing the engine or the protocol:

    python frontend/scripts/make_fixture.py
"""
import json
import math
import pathlib

from skillbench.model import Task, TrialConfig, config_to_dict
from skillbench.schedule import build_schedule
from skillbench.service import Phase, Session
from skillbench.sim import SimParams
from skillbench.course import build_square_course
from skillbench.synthetic import CourseDriver, OperatorModel, generate_responses
from skillbench.model import Pose

DT = 0.02

CMD = TrialConfig(
    direction_set=(0.0, math.pi / 2),
    repeats_per_target=2,
    prompt_duration_range=(0.4, 0.8),
    inter_prompt_gap=0.3,
    rng_seed=13,
)


def _traj_config():
    course = build_square_course(side=3.0, half_width=0.6, visibility_radius=2.0)
    footprint = tuple((0.5 * x, 0.5 * y) for x, y in SimParams().footprint)
    return TrialConfig(
        task=Task.TRAJECTORY_FOLLOWING,
        course=course,
        sim=SimParams(dt=DT, footprint=footprint),
        trajectory_timeout=90.0,
        rng_seed=13,
    )


def record():
    session = Session(session_id="fixture")
    events = []
    outbound = []

    def msg(payload):
        events.append({"kind": "message", "payload": payload})
        outbound.extend(session.handle_message(payload))

    def tick(t):
        events.append({"kind": "tick", "t": t})
        outbound.extend(session.handle_tick(t))

    seq = 0

    def next_seq():
        nonlocal seq
        seq += 1
        return seq

    msg({"type": "hello", "seq": next_seq(), "client_time": 0.0, "user": "fixture"})
    msg({"type": "start_trial", "seq": next_seq(), "session_id": "fixture",
         "config": config_to_dict(CMD)})

    schedule = build_schedule(CMD)
    stream, _ = generate_responses(
        schedule, OperatorModel(reaction_delay=0.2, seed=5), CMD.sample_rate_hz,
        CMD.inter_prompt_gap,
    )
    pending = list(stream)
    k = 0
    while session.phase is not Phase.SUMMARY and k < 20000:
        k += 1
        tick(k * DT)
        while pending and pending[0].t <= k * DT:
            s = pending.pop(0)
            msg({"type": "input", "seq": next_seq(), "session_id": "fixture",
                 "t": s.t, "ux": s.ux, "uy": s.uy})
    command_summary = [m for m in outbound if m["type"] == "summary"][-1]

    traj = _traj_config()
    msg({"type": "start_trial", "seq": next_seq(), "session_id": "fixture",
         "config": config_to_dict(traj)})
    driver = CourseDriver(traj.course, OperatorModel(seed=5), traj.sim)
    marker = len(outbound)
    while session.phase is Phase.TRAJECTORY_TASK and k < 40000:
        k += 1
        tick(k * DT)
        poses = [m for m in outbound[marker:] if m["type"] == "pose"]
        marker = len(outbound)
        if poses:
            p = poses[-1]
            cmd = driver.command(Pose(p["x"], p["y"], p["heading"]))
            msg({"type": "input", "seq": next_seq(), "session_id": "fixture",
                 "t": None, "ux": cmd.ux, "uy": cmd.uy})
    summaries = [m for m in outbound if m["type"] == "summary"]
    assert len(summaries) == 2, "fixture session must finish both tasks"

    return {
        "events": events,
        "outbound": outbound,
        "command_summary": command_summary,
        "trajectory_summary": summaries[-1],
    }


if __name__ == "__main__":
    fixture = record()
    out = pathlib.Path(__file__).parent.parent / "tests" / "fixtures" / "session_log.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(fixture))
    print(f"wrote {out} ({len(fixture['outbound'])} outbound messages)")
