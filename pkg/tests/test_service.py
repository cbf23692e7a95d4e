import math

import pytest

from skillbench.command_scoring import batch_score
from skillbench.course import build_square_course
from skillbench.model import Task, TrialConfig, config_to_dict
from skillbench.schedule import build_schedule, prompt_onsets
from skillbench.scoring import score_bundle
from skillbench.service import Phase, Session, normalize_gamepad
from skillbench.sim import SimParams
from skillbench.store import SessionStore
from skillbench.synthetic import CourseDriver, OperatorModel, generate_responses

DT = 0.02

SMALL_CMD = TrialConfig(
    direction_set=(0.0, math.pi / 2),
    repeats_per_target=2,
    prompt_duration_range=(0.4, 0.8),
    inter_prompt_gap=0.3,
    rng_seed=5,
)


def _small_course():
    return build_square_course(side=3.0, half_width=0.6, visibility_radius=2.0)


def _small_sim():
    footprint = tuple((0.5 * x, 0.5 * y) for x, y in SimParams().footprint)
    return SimParams(dt=DT, footprint=footprint)


SMALL_TRAJ = TrialConfig(
    task=Task.TRAJECTORY_FOLLOWING,
    course=_small_course(),
    sim=_small_sim(),
    trajectory_timeout=120.0,
    rng_seed=5,
)


def _drain_types(messages):
    return [m["type"] for m in messages]


def run_command_session(store=None, model=None, config=SMALL_CMD):
    """Scripted session: ticks plus operator-generated inputs, returns
    (session, event_log, outbound_messages)."""
    model = model or OperatorModel(reaction_delay=0.2, seed=9)
    schedule = build_schedule(config)
    stream, _ = generate_responses(schedule, model, config.sample_rate_hz, config.inter_prompt_gap)
    session = Session(store=store, session_id="t-1")
    log = [
        ("message", {"type": "hello", "seq": 1, "client_time": 0.0, "user": "tester"}),
        ("message", {"type": "start_trial", "seq": 2, "session_id": "t-1",
                     "config": config_to_dict(config)}),
    ]
    total = prompt_onsets(schedule, config.inter_prompt_gap)[-1] + schedule.prompts[-1].duration
    n_ticks = int(total / DT) + 10
    sample_iter = iter(stream)
    pending = next(sample_iter, None)
    for k in range(1, n_ticks + 1):
        t = k * DT
        log.append(("tick", t))
        while pending is not None and pending.t <= t:
            log.append(
                ("message", {"type": "input", "seq": len(log) + 1, "session_id": "t-1",
                             "t": pending.t, "ux": pending.ux, "uy": pending.uy})
            )
            pending = next(sample_iter, None)
    # re-number seqs monotonically
    seq = 0
    fixed = []
    for kind, payload in log:
        if kind == "message":
            seq += 1
            payload = {**payload, "seq": seq}
        fixed.append((kind, payload))
    out = replay(session, fixed)
    return session, fixed, out


def replay(session, event_log):
    out = []
    for kind, payload in event_log:
        if kind == "tick":
            out.extend(session.handle_tick(payload))
        else:
            out.extend(session.handle_message(payload))
    return out


def test_hello_moves_idle_to_briefing():
    session = Session(session_id="x")
    out = session.handle_message({"type": "hello", "seq": 1, "client_time": 0.0})
    assert session.phase is Phase.BRIEFING
    assert out[0]["type"] == "config_ack"
    assert out[0]["session_id"] == "x"


def test_input_during_idle_is_protocol_error():
    session = Session(session_id="x")
    out = session.handle_message({"type": "input", "seq": 1, "session_id": "x", "ux": 0, "uy": 0})
    assert out[0]["type"] == "error"
    assert out[0]["code"] in ("bad_phase", "bad_session")
    assert session.phase is Phase.IDLE


def test_unknown_message_type_rejected():
    session = Session(session_id="x")
    session.handle_message({"type": "hello", "seq": 1, "client_time": 0.0})
    out = session.handle_message({"type": "warp", "seq": 2, "session_id": "x"})
    assert out[0]["type"] == "error" and out[0]["code"] == "unknown_type"


def test_non_increasing_seq_rejected():
    session = Session(session_id="x")
    session.handle_message({"type": "hello", "seq": 5, "client_time": 0.0})
    out = session.handle_message({"type": "start_trial", "seq": 5, "session_id": "x", "config": None})
    assert out[0]["code"] == "bad_seq"


def test_bad_config_reports_error():
    session = Session(session_id="x")
    session.handle_message({"type": "hello", "seq": 1, "client_time": 0.0})
    out = session.handle_message(
        {"type": "start_trial", "seq": 2, "session_id": "x",
         "config": {"version": 1, "task": "command_following", "direction_set": []}}
    )
    assert out[0]["type"] == "error" and out[0]["code"] == "bad_config"
    assert session.phase is Phase.BRIEFING


def test_briefing_then_first_prompt_showing():
    session = Session(session_id="t-1")
    session.handle_message({"type": "hello", "seq": 1, "client_time": 0.0})
    session.handle_message(
        {"type": "start_trial", "seq": 2, "session_id": "t-1", "config": config_to_dict(SMALL_CMD)}
    )
    assert session.phase is Phase.INTER_PROMPT
    shown = []
    t = 0.0
    while not shown:
        t += DT
        shown = [m for m in session.handle_tick(t) if m["type"] == "prompt_show"]
    assert shown[0]["m"] == 1
    assert t == pytest.approx(SMALL_CMD.inter_prompt_gap, abs=DT + 1e-9)


def test_full_command_session_matches_batch_oracle():
    session, _log, out = run_command_session()
    summaries = [m for m in out if m["type"] == "summary"]
    assert len(summaries) == 1
    report = summaries[0]["report"]

    config = SMALL_CMD
    schedule = build_schedule(config)
    stream, _ = generate_responses(
        schedule, OperatorModel(reaction_delay=0.2, seed=9), config.sample_rate_hz,
        config.inter_prompt_gap,
    )
    oracle = batch_score(stream, schedule, config)
    assert report["r_p"] == oracle.r_p
    assert report["t_d"] == pytest.approx(oracle.t_d, abs=1e-9)
    assert report["t_s"] == pytest.approx(oracle.t_s, abs=1e-9)
    assert report["a_r"] == pytest.approx(oracle.a_r, abs=1e-9)
    assert report["a_s"] == pytest.approx(oracle.a_s, abs=1e-9)


def test_summary_emitted_exactly_once_and_prompts_shown_once_each():
    _session, _log, out = run_command_session()
    assert sum(1 for m in out if m["type"] == "summary") == 1
    shows = [m["m"] for m in out if m["type"] == "prompt_show"]
    assert sorted(shows) == list(range(1, len(SMALL_CMD.direction_set) * SMALL_CMD.repeats_per_target + 1))


def test_replaying_event_log_reproduces_messages_and_report():
    _s1, log, out1 = run_command_session()
    s2 = Session(session_id="t-1")
    out2 = replay(s2, log)
    assert out1 == out2
    assert _s1.last_report == s2.last_report


def test_sample_accounting_balances():
    session, _log, _out = run_command_session()
    dropped = sum(session.dropped.values())
    assert session.received == session.scored + session.applied + dropped
    assert session.scored > 0


def test_persisted_trial_rescores_to_summary(tmp_path):
    with SessionStore(tmp_path / "s.db") as store:
        session, _log, out = run_command_session(store=store)
        summary = next(m for m in out if m["type"] == "summary")
        trial_id = summary["trial_id"]
        stored = store.stored_outcomes(trial_id)
        rescored = score_bundle(store.load_trial(trial_id)).measures()
        assert stored == rescored
        for name, value in rescored.items():
            assert summary["report"][name] == value


def test_trajectory_session_completes_and_scores(tmp_path):
    with SessionStore(tmp_path / "s.db") as store:
        session = Session(store=store, session_id="t-1")
        session.handle_message({"type": "hello", "seq": 1, "client_time": 0.0})
        session.handle_message(
            {"type": "start_trial", "seq": 2, "session_id": "t-1",
             "config": config_to_dict(SMALL_TRAJ)}
        )
        assert session.phase is Phase.TRAJECTORY_TASK
        course = SMALL_TRAJ.course
        params = SMALL_TRAJ.sim
        driver = CourseDriver(course, OperatorModel(seed=3), params)
        pose = course.start_pose
        out = []
        seq = 2
        k = 0
        while session.phase is Phase.TRAJECTORY_TASK and k < 20000:
            k += 1
            msgs = session.handle_tick(k * DT)
            out.extend(msgs)
            poses = [m for m in msgs if m["type"] == "pose"]
            if poses:
                from skillbench.model import Pose

                p = poses[-1]
                pose = Pose(p["x"], p["y"], p["heading"])
                cmd = driver.command(pose)
                seq += 1
                out.extend(
                    session.handle_message(
                        {"type": "input", "seq": seq, "session_id": "t-1",
                         "t": None, "ux": cmd.ux, "uy": cmd.uy}
                    )
                )
        summaries = [m for m in out if m["type"] == "summary"]
        assert len(summaries) == 1
        report = summaries[0]["report"]
        assert report["t_ob"] == 0.0
        assert report["v_avg"] is not None and report["v_avg"] > 0.2
        assert report["s"] is not None and report["s"] <= 0.0
        # round trip through the store
        trial_id = summaries[0]["trial_id"]
        assert store.stored_outcomes(trial_id) == score_bundle(store.load_trial(trial_id)).measures()
        # completion well before the timeout
        assert session.clock < SMALL_TRAJ.trajectory_timeout


def test_abort_mid_trial_records_aborted_row(tmp_path):
    with SessionStore(tmp_path / "s.db") as store:
        session = Session(store=store, session_id="t-1")
        session.handle_message({"type": "hello", "seq": 1, "client_time": 0.0})
        session.handle_message(
            {"type": "start_trial", "seq": 2, "session_id": "t-1",
             "config": config_to_dict(SMALL_CMD)}
        )
        session.handle_tick(DT)
        out = session.handle_message({"type": "abort", "seq": 3, "session_id": "t-1"})
        assert session.phase is Phase.CLOSED
        assert out[0]["aborted"] is True
        rows = store._conn.execute("SELECT status FROM trials").fetchall()
        assert rows == [("aborted",)]


def test_questionnaire_before_trial_is_persisted_with_it(tmp_path):
    with SessionStore(tmp_path / "s.db") as store:
        session = Session(store=store, session_id="t-1")
        session.handle_message({"type": "hello", "seq": 1, "client_time": 0.0})
        out = session.handle_message(
            {"type": "questionnaire_response", "seq": 2, "session_id": "t-1",
             "instrument_id": "confidence", "responses": [4]}
        )
        assert out == []
        session2_log = [
            ("message", {"type": "start_trial", "seq": 3, "session_id": "t-1",
                         "config": config_to_dict(SMALL_CMD)}),
        ]
        replay(session, session2_log)
        schedule = build_schedule(SMALL_CMD)
        stream, _ = generate_responses(
            schedule, OperatorModel(reaction_delay=0.2, seed=9), 50.0, SMALL_CMD.inter_prompt_gap
        )
        seq = 3
        k = 0
        while session.phase is not Phase.SUMMARY and k < 20000:
            k += 1
            session.handle_tick(k * DT)
            while stream and stream[0].t <= k * DT:
                s = stream.pop(0)
                seq += 1
                session.handle_message(
                    {"type": "input", "seq": seq, "session_id": "t-1",
                     "t": s.t, "ux": s.ux, "uy": s.uy}
                )
        bundle = store.load_trial(session.last_trial_id)
        assert [c.instrument_id for c in bundle.covariates] == ["confidence"]


def test_questionnaire_bad_response_rejected():
    session = Session(session_id="t-1")
    session.handle_message({"type": "hello", "seq": 1, "client_time": 0.0})
    out = session.handle_message(
        {"type": "questionnaire_response", "seq": 2, "session_id": "t-1",
         "instrument_id": "confidence", "responses": [9]}
    )
    assert out[0]["type"] == "error" and out[0]["code"] == "bad_response"


def test_normalize_gamepad_axes_and_buttons():
    assert normalize_gamepad({"ux": 0.0, "uy": -1.0}, 0.1) == (0.0, -1.0)
    assert normalize_gamepad({"buttons": ["up"]}, 0.1) == (0.0, 1.0)
    diag = normalize_gamepad({"buttons": ["up", "right"]}, 0.1)
    assert math.hypot(*diag) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        normalize_gamepad({"ux": float("nan"), "uy": 0.0}, 0.1)
    with pytest.raises(ValueError):
        normalize_gamepad({"buttons": ["warp"]}, 0.1)
    with pytest.raises(ValueError):
        normalize_gamepad({}, 0.1)


def test_malformed_input_dropped_and_counted():
    session = Session(session_id="t-1")
    session.handle_message({"type": "hello", "seq": 1, "client_time": 0.0})
    session.handle_message(
        {"type": "start_trial", "seq": 2, "session_id": "t-1", "config": config_to_dict(SMALL_CMD)}
    )
    out = session.handle_message(
        {"type": "input", "seq": 3, "session_id": "t-1", "t": 0.1, "ux": float("nan"), "uy": 0.0}
    )
    assert out == []
    assert session.dropped.get("malformed") == 1
    assert session.received == 1


def test_second_trial_can_start_from_summary(tmp_path):
    with SessionStore(tmp_path / "s.db") as store:
        session, log, _ = run_command_session(store=store)
        assert session.phase is Phase.SUMMARY
        out = session.handle_message(
            {"type": "start_trial", "seq": 10_000, "session_id": "t-1",
             "config": config_to_dict(SMALL_TRAJ)}
        )
        assert session.phase is Phase.TRAJECTORY_TASK
        assert out[0]["type"] == "config_ack"


def test_frontend_fixture_replays_identically():
    """The UI's recorded session fixture replays through the engine to the
    same outbound stream: the loopback contract the frontend tests rely on."""
    import json
    from pathlib import Path

    fixture_path = (
        Path(__file__).parent.parent / "frontend" / "tests" / "fixtures" / "session_log.json"
    )
    if not fixture_path.exists():
        pytest.skip("frontend fixture not generated")
    fixture = json.loads(fixture_path.read_text())
    session = Session(session_id="fixture")
    outbound = []
    for event in fixture["events"]:
        if event["kind"] == "tick":
            outbound.extend(session.handle_tick(event["t"]))
        else:
            outbound.extend(session.handle_message(event["payload"]))
    assert outbound == fixture["outbound"]
