"""The five command-following outcome measures, batch and streaming.

Per prompt m with target command u_hat and duration T:
  * first-within time: earliest sample time whose command is within tolerance,
  * settling time: earliest time from which every remaining sample stays
    within tolerance (absent when the final sample is out of tolerance),
  * initial accuracy 1 - e at the first within-tolerance sample,
  * settled accuracy: mean of 1 - e over the settled window,
with e the normalized command error.  Aggregates average the defined subset
(tracked prompts for delay / initial accuracy, settled prompts for settling
time / settled accuracy); the success percentage counts all prompts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .model import (
    CommandVector,
    ConfigError,
    OutcomeReport,
    PromptEvent,
    PromptSpec,
    Task,
    TrialConfig,
)
from .schedule import Schedule, prompt_onsets

_atan2 = math.atan2
_hypot = math.hypot
_PI = math.pi
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CommandScore:
    """Aggregate command-task outcome; None marks undefined measures."""

    t_d: Optional[float]
    r_p: float
    t_s: Optional[float]
    a_r: Optional[float]
    a_s: Optional[float]
    prompt_count: int
    responded_count: int
    settled_count: int
    events: tuple[PromptEvent, ...] = ()

    def report(self) -> OutcomeReport:
        return OutcomeReport(
            task=Task.COMMAND_FOLLOWING,
            t_d=self.t_d,
            r_p=self.r_p,
            t_s=self.t_s,
            a_r=self.a_r,
            a_s=self.a_s,
            prompt_count=self.prompt_count,
            responded_count=self.responded_count,
            settled_count=self.settled_count,
            per_prompt=tuple(e.summary() for e in self.events),
        )


class PromptTracker:
    """Online scorer for a single prompt; O(1) memory per sample."""

    __slots__ = (
        "spec", "_tol", "_mag_tol", "_mag_on", "_theta_hat", "_mag_hat",
        "n", "first_t", "first_acc", "run_start", "run_sum", "run_n",
    )

    def __init__(self, spec: PromptSpec, config: TrialConfig) -> None:
        self.spec = spec
        self._tol = config.tolerance_rad
        self._mag_tol = config.mag_tolerance
        self._mag_on = config.magnitude_enabled and spec.mag_hat is not None
        self._theta_hat = spec.theta_hat
        self._mag_hat = spec.mag_hat
        self.n = 0
        self.first_t: Optional[float] = None
        self.first_acc: Optional[float] = None
        self.run_start: Optional[float] = None
        self.run_sum = 0.0
        self.run_n = 0

    def feed(self, tau: float, ux: float, uy: float) -> None:
        """Score one sample at prompt-relative time tau in (0, duration]."""
        self.n += 1
        if ux == 0.0 and uy == 0.0:
            self.run_start = None
            return
        dtheta = _atan2(uy, ux) - self._theta_hat
        if dtheta > _PI:
            dtheta -= _TWO_PI
        elif dtheta <= -_PI:
            dtheta += _TWO_PI
        if dtheta > self._tol or -dtheta > self._tol:
            self.run_start = None
            return
        if self._mag_on:
            dmag = abs(_hypot(ux, uy) - self._mag_hat)
            if dmag > self._mag_tol:
                self.run_start = None
                return
            acc = 1.0 - 0.5 * (abs(dtheta) / _PI + dmag)
        else:
            acc = 1.0 - abs(dtheta) / _PI
        if self.first_t is None:
            self.first_t = tau
            self.first_acc = acc
        if self.run_start is None:
            self.run_start = tau
            self.run_sum = 0.0
            self.run_n = 0
        self.run_sum += acc
        self.run_n += 1

    def close(self) -> PromptEvent:
        """Emit the scored event; a surviving run means the prompt settled."""
        settled_acc = self.run_sum / self.run_n if self.run_start is not None else None
        return PromptEvent(
            spec=self.spec,
            n_samples=self.n,
            tracked=self.first_t is not None,
            t_first_within=self.first_t,
            t_settled=self.run_start,
            initial_accuracy=self.first_acc,
            settled_accuracy=settled_acc,
        )


def score_prompt(
    samples: Sequence[CommandVector], spec: PromptSpec, config: TrialConfig
) -> PromptEvent:
    """Batch-score one prompt from its ordered prompt-relative samples."""
    tracker = PromptTracker(spec, config)
    last = -math.inf
    for s in samples:
        if not 0.0 < s.t <= spec.duration:
            raise ValueError(f"sample time {s.t} outside (0, {spec.duration}]")
        if s.t < last:
            raise ValueError("samples must be ordered by time")
        last = s.t
        tracker.feed(s.t, s.ux, s.uy)
    event = tracker.close()
    return PromptEvent(
        spec=event.spec,
        n_samples=event.n_samples,
        tracked=event.tracked,
        t_first_within=event.t_first_within,
        t_settled=event.t_settled,
        initial_accuracy=event.initial_accuracy,
        settled_accuracy=event.settled_accuracy,
        samples=tuple(samples),
    )


def aggregate(events: Sequence[PromptEvent], prompt_count: int) -> CommandScore:
    """Combine per-prompt events into the five aggregate measures."""
    if prompt_count <= 0:
        raise ConfigError("prompt_count must be positive")
    if len(events) != prompt_count:
        raise ConfigError(f"expected {prompt_count} events, got {len(events)}")
    tracked = [e for e in events if e.tracked]
    settled = [e for e in events if e.t_settled is not None]
    n_t, n_s = len(tracked), len(settled)

    def _mean(values: Iterable[float]) -> float:
        values = list(values)
        return sum(values) / len(values)

    return CommandScore(
        t_d=_mean(e.t_first_within for e in tracked) if n_t else None,
        r_p=100.0 * n_t / prompt_count,
        t_s=_mean(e.t_settled for e in settled) if n_s else None,
        a_r=_mean(e.initial_accuracy for e in tracked) if n_t else None,
        a_s=_mean(e.settled_accuracy for e in settled) if n_s else None,
        prompt_count=prompt_count,
        responded_count=n_t,
        settled_count=n_s,
        events=tuple(events),
    )


def slice_by_prompts(
    samples: Sequence[CommandVector], schedule: Schedule, gap: float
) -> list[list[CommandVector]]:
    """Split a trial-clock sample stream into prompt-relative windows.

    Prompt m owns samples with t - onset_m in (0, T_m]; gap samples are
    discarded.  The stream must be time-ordered.
    """
    onsets = prompt_onsets(schedule, gap)
    out: list[list[CommandVector]] = [[] for _ in schedule.prompts]
    idx = 0
    n = len(onsets)
    for s in samples:
        while idx < n and s.t > onsets[idx] + schedule.prompts[idx].duration:
            idx += 1
        if idx >= n:
            break
        tau = s.t - onsets[idx]
        if tau > 0.0:
            out[idx].append(CommandVector(tau, s.ux, s.uy))
    return out


def batch_score(
    samples: Sequence[CommandVector], schedule: Schedule, config: TrialConfig
) -> CommandScore:
    """Score a whole trial-clock stream against its schedule in one pass."""
    windows = slice_by_prompts(samples, schedule, config.inter_prompt_gap)
    events = [
        score_prompt(win, spec, config)
        for win, spec in zip(windows, schedule.prompts)
    ]
    return aggregate(events, len(schedule.prompts))


class StreamingCommandScorer:
    """Online scorer over a live trial-clock sample stream.

    After the final sample, ``finish()`` yields a CommandScore identical to
    the batch aggregate over the same stream.  Out-of-order samples are
    dropped and counted.
    """

    def __init__(self, config: TrialConfig, schedule: Schedule) -> None:
        self._config = config
        self._schedule = schedule
        self._onsets = prompt_onsets(schedule, config.inter_prompt_gap)
        self._events: list[PromptEvent] = []
        self._tracker: Optional[PromptTracker] = None
        self._idx = 0
        self._last_t = -math.inf
        self.dropped_out_of_order = 0
        self.dropped_gap = 0

    # -- explicit prompt lifecycle (driven by the session service) ----------

    def open_next(self) -> PromptSpec:
        if self._tracker is not None:
            raise RuntimeError("previous prompt still open")
        if self._idx >= len(self._schedule.prompts):
            raise RuntimeError("no prompts left")
        spec = self._schedule.prompts[self._idx]
        self._tracker = PromptTracker(spec, self._config)
        return spec

    def feed_current(self, tau: float, ux: float, uy: float) -> None:
        if self._tracker is None:
            raise RuntimeError("no prompt open")
        self._tracker.feed(tau, ux, uy)

    def close_current(self) -> PromptEvent:
        if self._tracker is None:
            raise RuntimeError("no prompt open")
        event = self._tracker.close()
        self._events.append(event)
        self._tracker = None
        self._idx += 1
        return event

    # -- trial-clock streaming (used headless and by replay) ----------------

    def update(self, sample: CommandVector) -> None:
        """Route one trial-clock sample; drops out-of-order and gap samples."""
        t = sample.t
        if t < self._last_t:
            self.dropped_out_of_order += 1
            return
        self._last_t = t
        prompts = self._schedule.prompts
        while self._idx < len(prompts) and t > self._onsets[self._idx] + prompts[self._idx].duration:
            if self._tracker is None:
                self._tracker = PromptTracker(prompts[self._idx], self._config)
            self.close_current()
        if self._idx >= len(prompts):
            self.dropped_gap += 1
            return
        tau = t - self._onsets[self._idx]
        if tau <= 0.0:
            self.dropped_gap += 1
            return
        if self._tracker is None:
            self._tracker = PromptTracker(prompts[self._idx], self._config)
        self._tracker.feed(tau, sample.ux, sample.uy)

    def finish(self) -> CommandScore:
        """Close any remaining prompts (untracked if silent) and aggregate."""
        prompts = self._schedule.prompts
        while self._idx < len(prompts):
            if self._tracker is None:
                self._tracker = PromptTracker(prompts[self._idx], self._config)
            self.close_current()
        return aggregate(self._events, len(prompts))

    def snapshot(self) -> CommandScore:
        """Partial score over prompts closed so far (empty-safe)."""
        if not self._events:
            return CommandScore(None, 0.0, None, None, None, 0, 0, 0)
        return aggregate(self._events, len(self._events))

    @property
    def closed_events(self) -> tuple[PromptEvent, ...]:
        return tuple(self._events)

    @property
    def next_index(self) -> int:
        """0-based index of the prompt that open_next() would start."""
        return self._idx
