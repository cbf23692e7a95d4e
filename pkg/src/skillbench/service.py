"""Live assessment session: a deterministic state machine over ticks and
client messages, speaking the JSON protocol the browser UI consumes.

The session clock is tick-driven (the server stamps ideal tick times), so
replaying a recorded event log reproduces the outbound message stream and
the final outcome report exactly.  Input samples carry client capture
timestamps, reconciled once against the session clock at hello, so network
jitter cannot leak into the response-delay measures.
"""
from __future__ import annotations

import enum
import math
from typing import Callable, Optional

from .command_scoring import StreamingCommandScorer
from .course import (
    CourseSpec,
    build_square_course,
    footprint_in_bounds,
    locate_segment,
    visible_window,
)
from .model import (
    CommandVector,
    ConfigError,
    OutcomeReport,
    Pose,
    Task,
    TrajectorySample,
    TrialConfig,
    config_from_dict,
    config_to_dict,
    make_covariate,
    normalize_input,
)
from .schedule import build_schedule, prompt_onsets
from .sim import SimParams, step
from .store import SessionStore, TrialBundle
from .trajectory_scoring import score_trajectory

PROTOCOL_VERSION = 1

#: Button names for devices without proportional axes (headarray, sip/puff).
BUTTON_VECTORS = {
    "up": (0.0, 1.0),
    "down": (0.0, -1.0),
    "left": (-1.0, 0.0),
    "right": (1.0, 0.0),
}


class Phase(enum.Enum):
    IDLE = "idle"
    BRIEFING = "briefing"
    COMMAND_TASK = "command_task"
    INTER_PROMPT = "inter_prompt"
    TRAJECTORY_TASK = "trajectory_task"
    SUMMARY = "summary"
    CLOSED = "closed"


def normalize_gamepad(msg: dict, deadzone: float) -> tuple[float, float]:
    """Map an input message (axes or buttons) to a normalized command payload.

    Raises ValueError on malformed reports; callers drop and count those.
    """
    if msg.get("ux") is not None and msg.get("uy") is not None:
        return normalize_input(float(msg["ux"]), float(msg["uy"]), deadzone)
    buttons = msg.get("buttons")
    if buttons:
        sx = sy = 0.0
        known = False
        for b in buttons:
            vec = BUTTON_VECTORS.get(b)
            if vec:
                known = True
                sx += vec[0]
                sy += vec[1]
        if known:
            return normalize_input(sx, sy, deadzone)
    raise ValueError("input report carries neither axes nor known buttons")


class Session:
    """One client's session: single-writer event loop, no shared state."""

    def __init__(
        self,
        store: Optional[SessionStore] = None,
        session_id: str = "session",
        user: str = "anonymous",
        default_config: Optional[TrialConfig] = None,
        wall_time: Callable[[], str] = lambda: "1970-01-01T00:00:00",
    ) -> None:
        self.store = store
        self.session_id = session_id
        self.user = user
        self.default_config = default_config or TrialConfig()
        self.wall_time = wall_time

        self.phase = Phase.IDLE
        self.clock = 0.0
        self._seq_out = 0
        self._last_seq_in = 0
        self._offset: Optional[float] = None
        self._last_input_t = -math.inf

        self.received = 0
        self.scored = 0
        self.applied = 0
        self.dropped: dict[str, int] = {}

        self.last_trial_id: Optional[int] = None
        self.last_report: Optional[OutcomeReport] = None
        self._pending_covariates: list = []
        self._trial = None  # per-trial mutable state

    # -- message plumbing ----------------------------------------------------

    def _out(self, type_: str, **payload) -> dict:
        self._seq_out += 1
        return {"type": type_, "session_id": self.session_id, "seq": self._seq_out, **payload}

    def _error(self, code: str, detail: str = "") -> dict:
        return self._out("error", code=code, detail=detail)

    def _drop(self, reason: str) -> None:
        self.dropped[reason] = self.dropped.get(reason, 0) + 1

    # -- event entry points ----------------------------------------------------

    def handle_tick(self, t: float) -> list[dict]:
        """Advance the session clock to t (ideal tick time, monotone)."""
        if t < self.clock:
            return []
        self.clock = t
        if self.phase in (Phase.COMMAND_TASK, Phase.INTER_PROMPT):
            return self._command_tick()
        if self.phase is Phase.TRAJECTORY_TASK:
            return self._trajectory_tick()
        return []

    def handle_message(self, msg: object) -> list[dict]:
        """Process one client message received at the current clock."""
        if not isinstance(msg, dict) or "type" not in msg:
            return [self._error("malformed", "message must be an object with a type")]
        seq = msg.get("seq")
        if not isinstance(seq, int) or seq <= self._last_seq_in:
            return [self._error("bad_seq", f"seq must be an integer above {self._last_seq_in}")]
        self._last_seq_in = seq
        mtype = msg["type"]
        if mtype == "hello":
            return self._on_hello(msg)
        if msg.get("session_id") != self.session_id:
            return [self._error("bad_session", "unknown or missing session_id")]
        if mtype == "start_trial":
            return self._on_start_trial(msg)
        if mtype == "input":
            return self._on_input(msg)
        if mtype == "questionnaire_response":
            return self._on_questionnaire(msg)
        if mtype == "abort":
            return self._on_abort()
        return [self._error("unknown_type", f"unknown message type {mtype!r}")]

    # -- client messages -------------------------------------------------------

    def _on_hello(self, msg: dict) -> list[dict]:
        if self.phase is not Phase.IDLE:
            return [self._error("bad_phase", "hello only allowed once, at session start")]
        client_time = msg.get("client_time")
        try:
            self._offset = self.clock - float(client_time) if client_time is not None else None
        except (TypeError, ValueError):
            return [self._error("malformed", "client_time must be a number")]
        if isinstance(msg.get("user"), str) and msg["user"]:
            self.user = msg["user"]
        self.phase = Phase.BRIEFING
        return [
            self._out(
                "config_ack",
                phase=self.phase.value,
                protocol=PROTOCOL_VERSION,
                clock=self.clock,
                config=config_to_dict(self.default_config),
            )
        ]

    def _on_start_trial(self, msg: dict) -> list[dict]:
        if self.phase not in (Phase.BRIEFING, Phase.SUMMARY):
            return [self._error("bad_phase", f"cannot start a trial during {self.phase.value}")]
        raw = msg.get("config")
        try:
            config = config_from_dict(raw) if raw else self.default_config
        except (ConfigError, KeyError, TypeError, ValueError) as exc:
            return [self._error("bad_config", str(exc))]
        if config.task is Task.COMMAND_FOLLOWING:
            return self._start_command_trial(config)
        return self._start_trajectory_trial(config)

    def _start_command_trial(self, config: TrialConfig) -> list[dict]:
        schedule = build_schedule(config)
        self._trial = _CommandTrial(
            config=config,
            schedule=schedule,
            scorer=StreamingCommandScorer(config, schedule),
            onsets=prompt_onsets(schedule, config.inter_prompt_gap),
            start_clock=self.clock,
            started_at=self.wall_time(),
        )
        self.phase = Phase.INTER_PROMPT
        self._last_input_t = -math.inf
        return [
            self._out(
                "config_ack",
                phase=self.phase.value,
                clock=self.clock,
                config=config_to_dict(config),
                prompt_count=len(schedule.prompts),
            )
        ]

    def _start_trajectory_trial(self, config: TrialConfig) -> list[dict]:
        course = config.course or build_square_course()
        sim = config.sim or SimParams(dt=config.dt)
        try:
            course.require_footprint_fits(sim.footprint)
        except ConfigError as exc:
            return [self._error("bad_config", str(exc))]
        self._trial = _TrajectoryTrial(
            config=config,
            course=course,
            sim=sim,
            pose=course.start_pose,
            start_clock=self.clock,
            started_at=self.wall_time(),
        )
        self.phase = Phase.TRAJECTORY_TASK
        self._last_input_t = -math.inf
        return [
            self._out(
                "config_ack",
                phase=self.phase.value,
                clock=self.clock,
                config=config_to_dict(config),
                course_kind=course.kind,
                corridor_half_width=course.corridor_half_width,
                footprint=[list(v) for v in sim.footprint],
            ),
            self._pose_message(),
            self._out("visible_geometry", fragments=visible_window(course.start_pose, course)),
        ]

    def _on_input(self, msg: dict) -> list[dict]:
        if self.phase not in (Phase.COMMAND_TASK, Phase.INTER_PROMPT, Phase.TRAJECTORY_TASK):
            return [self._error("bad_phase", f"input not accepted during {self.phase.value}")]
        self.received += 1
        t_raw = msg.get("t")
        try:
            if t_raw is None:
                t_service = self.clock
            else:
                t_service = float(t_raw) + (self._offset or 0.0)
            if not math.isfinite(t_service):
                raise ValueError("non-finite timestamp")
        except (TypeError, ValueError):
            self._drop("malformed")
            return []
        if t_service < self._last_input_t:
            self._drop("out_of_order")
            return []
        try:
            ux, uy = normalize_gamepad(msg, self._trial.config.deadzone)
        except (TypeError, ValueError):
            self._drop("malformed")
            return []
        self._last_input_t = t_service

        if self.phase is Phase.TRAJECTORY_TASK:
            self._trial.held = CommandVector(t_service, ux, uy)
            self.applied += 1
            return []

        trial = self._trial
        t_trial = t_service - trial.start_clock
        sample = CommandVector(t_trial, ux, uy)
        idx = trial.scorer.next_index
        if trial.prompt_open:
            tau = t_trial - trial.onsets[idx]
            spec = trial.schedule.prompts[idx]
            if 0.0 < tau <= spec.duration:
                trial.scorer.feed_current(tau, ux, uy)
                trial.sample_log.append(sample)
                self.scored += 1
                return [self._out("prompt_feedback", ux=ux, uy=uy)]
        # Not scored: keep true gap samples in the raw log, but never samples
        # whose reconciled time falls inside some other prompt's window (the
        # batch re-score would pick those up and diverge from the live score).
        if self._in_any_window(t_trial):
            self._drop("late")
        else:
            self._drop("gap")
            trial.sample_log.append(sample)
        return [self._out("prompt_feedback", ux=ux, uy=uy)]

    def _in_any_window(self, t_trial: float) -> bool:
        trial = self._trial
        for onset, spec in zip(trial.onsets, trial.schedule.prompts):
            if onset >= t_trial:
                break
            if t_trial <= onset + spec.duration:
                return True
        return False

    def _on_questionnaire(self, msg: dict) -> list[dict]:
        if self.phase not in (Phase.BRIEFING, Phase.SUMMARY):
            return [self._error("bad_phase", "questionnaires run before or after tasks")]
        try:
            record = make_covariate(
                msg.get("instrument_id"), msg.get("responses", ()), self.wall_time()
            )
        except (ConfigError, TypeError) as exc:
            return [self._error("bad_response", str(exc))]
        if self.phase is Phase.SUMMARY and self.store and self.last_trial_id is not None:
            self.store.add_covariates(self.last_trial_id, [record])
        else:
            self._pending_covariates.append(record)
        return []

    def _on_abort(self) -> list[dict]:
        in_task = self.phase in (Phase.COMMAND_TASK, Phase.INTER_PROMPT, Phase.TRAJECTORY_TASK)
        if in_task and self.store is not None:
            self.store.record_aborted(self.user, self._trial.config, self._trial.started_at)
        self.phase = Phase.CLOSED
        self._trial = None
        return [self._out("config_ack", phase=self.phase.value, aborted=in_task)]

    def abort_for_shutdown(self) -> None:
        """Server-initiated teardown mid-trial; records an aborted trial."""
        if self.phase in (Phase.COMMAND_TASK, Phase.INTER_PROMPT, Phase.TRAJECTORY_TASK):
            if self.store is not None:
                self.store.record_aborted(self.user, self._trial.config, self._trial.started_at)
        self.phase = Phase.CLOSED
        self._trial = None

    # -- command task ticks ------------------------------------------------------

    def _command_tick(self) -> list[dict]:
        trial = self._trial
        out: list[dict] = []
        t_trial = self.clock - trial.start_clock
        prompts = trial.schedule.prompts
        while True:
            idx = trial.scorer.next_index
            if trial.prompt_open:
                deadline = trial.onsets[idx] + prompts[idx].duration
                if t_trial >= deadline:
                    trial.scorer.close_current()
                    trial.prompt_open = False
                    self.phase = Phase.INTER_PROMPT
                    snap = trial.scorer.snapshot()
                    out.append(
                        self._out(
                            "partial_score",
                            closed=snap.prompt_count,
                            r_p=snap.r_p,
                            t_d=snap.t_d,
                            t_s=snap.t_s,
                            a_r=snap.a_r,
                            a_s=snap.a_s,
                        )
                    )
                    continue
                break
            if idx >= len(prompts):
                out.extend(self._finish_command_trial())
                break
            if t_trial >= trial.onsets[idx]:
                spec = trial.scorer.open_next()
                trial.prompt_open = True
                self.phase = Phase.COMMAND_TASK
                out.append(
                    self._out(
                        "prompt_show",
                        m=spec.m,
                        theta_hat=spec.theta_hat,
                        mag_hat=spec.mag_hat,
                        duration=spec.duration,
                        onset=trial.onsets[idx],
                        deadline=trial.onsets[idx] + spec.duration,
                    )
                )
                continue
            break
        return out

    def _finish_command_trial(self) -> list[dict]:
        trial = self._trial
        score = trial.scorer.finish()
        report = score.report()
        self.last_report = report
        self._persist(
            TrialBundle(
                user=self.user,
                config=trial.config,
                started_at=trial.started_at,
                report=report,
                prompts=trial.schedule.prompts,
                command_samples=trial.sample_log,
                covariates=tuple(self._pending_covariates),
            )
        )
        self.phase = Phase.SUMMARY
        self._trial = None
        return [self._summary_message(report)]

    # -- trajectory task ticks ------------------------------------------------------

    def _trajectory_tick(self) -> list[dict]:
        trial = self._trial
        t_trial = self.clock - trial.start_clock
        if trial.complete or t_trial >= trial.config.trajectory_timeout:
            return self._finish_trajectory_trial()
        trial.pose = step(trial.pose, trial.held, trial.sim)
        seg = locate_segment(trial.pose, trial.course, trial.prev_segment)
        trial.prev_segment = seg
        in_b = footprint_in_bounds(trial.pose, trial.sim.footprint, trial.course)
        trial.trace.append(
            TrajectorySample(
                t=t_trial,
                pose=trial.pose,
                command=trial.held,
                v=abs(trial.held.uy) * trial.sim.v_max,
                segment_id=seg,
                in_bounds=in_b,
            )
        )
        trial.note_progress(seg)
        out = [self._pose_message()]
        out.append(self._out("visible_geometry", fragments=visible_window(trial.pose, trial.course)))
        trial.ticks += 1
        if trial.ticks % trial.partial_every == 0:
            n_out = sum(1 for s in trial.trace if not s.in_bounds)
            out.append(
                self._out(
                    "partial_score",
                    elapsed=t_trial,
                    n_samples=len(trial.trace),
                    t_ob=100.0 * n_out / len(trial.trace),
                )
            )
        return out

    def _pose_message(self) -> dict:
        trial = self._trial
        return self._out(
            "pose",
            t=self.clock - trial.start_clock,
            x=trial.pose.x,
            y=trial.pose.y,
            heading=trial.pose.heading,
        )

    def _finish_trajectory_trial(self) -> list[dict]:
        trial = self._trial
        report = score_trajectory(trial.trace, trial.course).report()
        self.last_report = report
        self._persist(
            TrialBundle(
                user=self.user,
                config=trial.config,
                started_at=trial.started_at,
                report=report,
                trajectory_samples=trial.trace,
                covariates=tuple(self._pending_covariates),
            )
        )
        self.phase = Phase.SUMMARY
        self._trial = None
        return [self._summary_message(report)]

    def _persist(self, bundle: TrialBundle) -> None:
        self._pending_covariates = []
        if self.store is None or bundle.sample_count() == 0:
            self.last_trial_id = None
            return
        self.last_trial_id = self.store.persist_trial(bundle)

    def _summary_message(self, report: OutcomeReport) -> dict:
        return self._out("summary", trial_id=self.last_trial_id, report=report.to_dict())


class _CommandTrial:
    __slots__ = (
        "config", "schedule", "scorer", "onsets", "start_clock", "started_at",
        "prompt_open", "sample_log",
    )

    def __init__(self, config, schedule, scorer, onsets, start_clock, started_at):
        self.config = config
        self.schedule = schedule
        self.scorer = scorer
        self.onsets = onsets
        self.start_clock = start_clock
        self.started_at = started_at
        self.prompt_open = False
        self.sample_log: list[CommandVector] = []


class _TrajectoryTrial:
    #: Vehicle must return this close to the course start to finish the lap.
    COMPLETION_RADIUS = 0.2

    __slots__ = (
        "config", "course", "sim", "pose", "start_clock", "started_at",
        "held", "trace", "prev_segment", "visited", "complete",
        "ticks", "partial_every", "_path_ids",
    )

    def __init__(self, config, course, sim, pose, start_clock, started_at):
        self.config = config
        self.course = course
        self.sim = sim
        self.pose = pose
        self.start_clock = start_clock
        self.started_at = started_at
        self.held = CommandVector(0.0, 0.0, 0.0)
        self.trace: list[TrajectorySample] = []
        self.prev_segment = None
        self.visited: set[int] = set()
        self.complete = False
        self.ticks = 0
        self.partial_every = max(1, round(1.0 / sim.dt))
        self._path_ids = {s.id for s in course.path_segments()}

    def note_progress(self, seg: Optional[int]) -> None:
        """Lap done: every path segment visited and vehicle back at the start."""
        if seg is not None and seg in self._path_ids:
            self.visited.add(seg)
        if self.visited >= self._path_ids:
            start = self.course.start_pose
            if math.hypot(self.pose.x - start.x, self.pose.y - start.y) <= self.COMPLETION_RADIUS:
                self.complete = True
