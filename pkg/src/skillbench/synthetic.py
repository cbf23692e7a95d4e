"""Parameterized synthetic responders: scripted humans for tests and demos.

``respond`` answers command prompts after a reaction delay with optional
angular/magnitude noise and lapses; ``drive`` follows a course centerline
with a lookahead steering law (turn-in-place at spin corners, reversing on
backward segments).  Both are deterministic per seed.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from .course import Arc, CourseSpec, Line, Spin
from .model import CommandVector, Pose, normalize_input
from .schedule import Schedule, prompt_onsets
from .sim import SimParams, step


@dataclass(frozen=True)
class OperatorModel:
    reaction_delay: float = 0.3
    angular_noise_sd: float = 0.0
    magnitude_noise_sd: float = 0.0
    settle_jitter: float = 0.0
    lapse_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("reaction_delay", "angular_noise_sd", "magnitude_noise_sd", "settle_jitter"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0.0 <= self.lapse_rate <= 1.0:
            raise ValueError("lapse_rate must be in [0, 1]")


def _polar(theta: float, mag: float) -> tuple[float, float]:
    # Snap near-zero components so axis-aligned targets round-trip through
    # atan2 exactly (noise-free runs must score accuracy 1.0, not 1 - 1 ulp).
    c, s = math.cos(theta), math.sin(theta)
    if abs(c) < 1e-12:
        c = 0.0
    if abs(s) < 1e-12:
        s = 0.0
    return (c * mag, s * mag)


def generate_responses(
    schedule: Schedule,
    model: OperatorModel,
    rate: float,
    gap: float,
) -> tuple[list[CommandVector], list[int]]:
    """Trial-clock response stream plus the indices of lapsed prompts.

    Samples cover the whole session timeline at the given rate; output is the
    zero vector during gaps, during each prompt's reaction delay, and for the
    whole of any lapsed prompt.
    """
    rng = random.Random(model.seed)
    lapsed: list[int] = []
    delays: list[float] = []
    for spec in schedule.prompts:
        if rng.random() < model.lapse_rate:
            lapsed.append(spec.m)
        delay = model.reaction_delay
        if model.settle_jitter > 0.0:
            delay += rng.uniform(0.0, model.settle_jitter)
        delays.append(delay)
    lapsed_set = set(lapsed)

    onsets = prompt_onsets(schedule, gap)
    total = (onsets[-1] + schedule.prompts[-1].duration) if onsets else 0.0
    dt = 1.0 / rate
    n = int(math.floor(total / dt)) + 1
    samples: list[CommandVector] = []
    idx = 0
    prompts = schedule.prompts
    for k in range(n):
        t = k * dt
        while idx < len(prompts) and t > onsets[idx] + prompts[idx].duration:
            idx += 1
        ux = uy = 0.0
        if idx < len(prompts):
            tau = t - onsets[idx]
            spec = prompts[idx]
            if 0.0 < tau <= spec.duration and spec.m not in lapsed_set and tau >= delays[idx]:
                theta = spec.theta_hat
                mag = spec.mag_hat if spec.mag_hat is not None else 1.0
                if model.angular_noise_sd > 0.0:
                    theta += rng.gauss(0.0, model.angular_noise_sd)
                if model.magnitude_noise_sd > 0.0:
                    mag = min(1.0, max(0.05, mag + rng.gauss(0.0, model.magnitude_noise_sd)))
                ux, uy = _polar(theta, mag)
        samples.append(CommandVector(t, ux, uy))
    return samples, lapsed


def respond(schedule: Schedule, model: OperatorModel, rate: float, gap: float = 0.5) -> list[CommandVector]:
    """Response stream only (see generate_responses)."""
    return generate_responses(schedule, model, rate, gap)[0]


class CourseDriver:
    """Stateful centerline follower emitting one command per tick.

    Steers toward a lookahead point on the current segment (half the
    visibility radius ahead), rotates in place through spin corners, and
    reverses on backward segments.  Noise-free runs stay in bounds on the
    default courses.
    """

    #: Smallest turn command the driver will issue: comfortably above the
    #: default input deadzone so pure spins cannot stall against it.
    MIN_TURN_CMD = 0.15

    def __init__(
        self,
        course: CourseSpec,
        model: OperatorModel,
        params: SimParams,
        cruise: float = 0.8,
        deadzone: float = 0.1,
    ) -> None:
        self.course = course
        self.model = model
        self.params = params
        self.cruise = cruise
        self.deadzone = deadzone
        self.lookahead = max(course.visibility_radius / 2.0, 4.0 * params.v_max * params.dt)
        self._rng = random.Random(model.seed)
        self._seg_idx = 0
        self._progress = 0.0
        self._target_heading: Optional[float] = None
        self.done = False
        # Noise draws persist ~0.5 s: per-tick white noise would simply be
        # steered out by the feedback loop, a held bias actually drifts the
        # vehicle the way human error does.
        self._noise_hold = max(1, round(0.5 / params.dt))
        self._noise_age = 0
        self._noise = (0.0, 0.0)

    def _segment_state(self, pose: Pose):
        seg = self.course.segments[self._seg_idx]
        geom = seg.geometry
        if isinstance(geom, Line):
            x0, y0 = geom.p0
            dx, dy = geom.p1[0] - x0, geom.p1[1] - y0
            length = geom.length
            ux, uy = dx / length, dy / length
            s = (pose.x - x0) * ux + (pose.y - y0) * uy
            s = min(length, max(0.0, s))
            s_look = min(length, s + self.lookahead)
            look = (x0 + s_look * ux, y0 + s_look * uy)
            return seg, s, length, look
        if isinstance(geom, Arc):
            span = abs(geom.dphi)
            sign = 1.0 if geom.dphi >= 0.0 else -1.0
            phi = math.atan2(pose.y - geom.center[1], pose.x - geom.center[0])
            delta = (sign * (phi - geom.phi0)) % (2.0 * math.pi)
            if delta > span + 0.5:
                delta = 0.0
            s = geom.radius * min(delta, span)
            s = max(self._progress, s)
            s_look = min(geom.length, s + self.lookahead)
            frac = s_look / geom.length
            look = geom.point_at(frac)
            return seg, s, geom.length, look
        return seg, 0.0, 0.0, geom.at

    def command(self, pose: Pose) -> CommandVector:
        """Command for the tick starting at this pose (t filled by caller)."""
        if self.done:
            return CommandVector(0.0, 0.0, 0.0)
        seg = self.course.segments[self._seg_idx]
        geom = seg.geometry

        if isinstance(geom, Spin):
            if self._target_heading is None:
                self._target_heading = self._entry_heading(self._seg_idx)
            err = _wrap(self._target_heading - pose.heading)
            if abs(err) < 0.02:
                self._next_segment()
                return self.command(pose)
            omega = max(-self.params.omega_max, min(self.params.omega_max, 2.0 * err))
            ux = omega / (self.params.turn_sign * self.params.omega_max)
            if abs(ux) < self.MIN_TURN_CMD:
                ux = math.copysign(self.MIN_TURN_CMD, ux)
            return self._emit(ux, 0.0)

        seg, s, length, look = self._segment_state(pose)
        self._progress = s
        if length - s <= max(0.02, self.cruise * self.params.v_max * self.params.dt):
            self._next_segment()
            return self.command(pose)
        bearing = math.atan2(look[1] - pose.y, look[0] - pose.x)
        if seg.travel == "backward":
            err = _wrap(bearing + math.pi - pose.heading)
            forward = -self.cruise
        else:
            err = _wrap(bearing - pose.heading)
            forward = self.cruise
        omega = max(-self.params.omega_max, min(self.params.omega_max, 2.5 * err))
        ux = omega / (self.params.turn_sign * self.params.omega_max)
        return self._emit(ux, forward)

    def _emit(self, ux: float, uy: float) -> CommandVector:
        if self.model.angular_noise_sd > 0.0 or self.model.magnitude_noise_sd > 0.0:
            if self._noise_age % self._noise_hold == 0:
                self._noise = (
                    self._rng.gauss(0.0, self.model.angular_noise_sd),
                    self._rng.gauss(0.0, self.model.magnitude_noise_sd),
                )
            self._noise_age += 1
            ux += self._noise[0]
            uy += self._noise[1]
        # Emit what the engine would accept: the open-loop and live-session
        # paths must see identical effective commands.
        ux, uy = normalize_input(ux, uy, self.deadzone)
        return CommandVector(0.0, ux, uy)

    def _entry_heading(self, spin_idx: int) -> float:
        seg = self.course.segments[spin_idx]
        assert isinstance(seg.geometry, Spin)
        prev = self.course.segments[spin_idx - 1]
        return _wrap(_drive_heading(prev, at_end=True) + seg.geometry.dphi)

    def _next_segment(self) -> None:
        self._seg_idx += 1
        self._progress = 0.0
        self._target_heading = None
        if self._seg_idx >= len(self.course.segments):
            self.done = True
            self._seg_idx = 0


def _wrap(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _drive_heading(segment, at_end: bool) -> float:
    geom = segment.geometry
    if isinstance(geom, Line):
        path = math.atan2(geom.p1[1] - geom.p0[1], geom.p1[0] - geom.p0[0])
    elif isinstance(geom, Arc):
        path = geom.tangent_at(1.0 if at_end else 0.0)
    else:
        raise ValueError("spin segments have no drive heading")
    if segment.travel == "backward":
        path = _wrap(path + math.pi)
    return path


def synthesize_trial(config, model: OperatorModel, user: str = "synthetic",
                     started_at: str = "1970-01-01T00:00:00"):
    """Complete scored TrialBundle for either task, ready to persist."""
    from .command_scoring import batch_score
    from .course import annotate_trace, build_square_course
    from .model import Task
    from .schedule import build_schedule
    from .sim import run_trace
    from .store import TrialBundle
    from .trajectory_scoring import score_trajectory

    if config.task is Task.COMMAND_FOLLOWING:
        schedule = build_schedule(config)
        stream = respond(schedule, model, config.sample_rate_hz, config.inter_prompt_gap)
        report = batch_score(stream, schedule, config).report()
        return TrialBundle(
            user=user,
            config=config,
            started_at=started_at,
            report=report,
            prompts=schedule.prompts,
            command_samples=stream,
        )
    course = config.course or build_square_course()
    params = config.sim or SimParams(dt=1.0 / config.sample_rate_hz)
    course.require_footprint_fits(params.footprint)
    commands = drive(course, model, params)
    trace = annotate_trace(run_trace(course.start_pose, commands, params), course, params.footprint)
    report = score_trajectory(trace, course).report()
    return TrialBundle(
        user=user,
        config=config,
        started_at=started_at,
        report=report,
        trajectory_samples=trace,
    )


def drive(
    course: CourseSpec,
    model: OperatorModel,
    params: SimParams,
    cruise: float = 0.8,
    max_time: float = 600.0,
) -> list[CommandVector]:
    """Command stream that takes the vehicle once around the course.

    Commands are stamped on the tick grid; replaying them through the
    simulator reproduces the driver's own closed-loop trajectory exactly.
    """
    driver = CourseDriver(course, model, params, cruise)
    pose = course.start_pose
    commands: list[CommandVector] = []
    k = 0
    max_steps = int(max_time / params.dt)
    while not driver.done and k < max_steps:
        cmd = driver.command(pose)
        cmd = CommandVector(k * params.dt, cmd.ux, cmd.uy)
        commands.append(cmd)
        pose = step(pose, cmd, params)
        k += 1
    commands.append(CommandVector(k * params.dt, 0.0, 0.0))
    return commands
