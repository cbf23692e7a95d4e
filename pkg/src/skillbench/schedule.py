"""Balanced random prompt scheduling for the command following task."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .model import ConfigError, PromptSpec, TrialConfig


@dataclass(frozen=True)
class Schedule:
    """Ordered prompt sequence; every target appears exactly once per block."""

    prompts: tuple[PromptSpec, ...]
    total_duration_estimate: float

    def __len__(self) -> int:
        return len(self.prompts)


def _target_grid(config: TrialConfig) -> list[tuple[float, float | None]]:
    mags: tuple = config.magnitude_set if config.magnitude_set else (None,)
    return [(theta, mag) for theta in config.direction_set for mag in mags]


def build_schedule(config: TrialConfig) -> Schedule:
    """Block-randomized schedule: one shuffled copy of the target grid per block.

    Deterministic for a given config seed.  Consecutive duplicates across
    block boundaries are broken by swapping a differing target to the front
    of the incoming block (impossible only when the grid has a single target).
    """
    if not config.direction_set:
        raise ConfigError("direction_set must not be empty")
    rng = random.Random(config.rng_seed)
    grid = _target_grid(config)
    ordered: list[tuple[float, float | None]] = []
    for _ in range(config.repeats_per_target):
        block = list(grid)
        rng.shuffle(block)
        if ordered and len(grid) > 1 and block[0] == ordered[-1]:
            for i in range(1, len(block)):
                if block[i] != ordered[-1]:
                    block[0], block[i] = block[i], block[0]
                    break
        ordered.extend(block)

    lo, hi = config.prompt_duration_range
    prompts = tuple(
        PromptSpec(m=i + 1, theta_hat=theta, mag_hat=mag, duration=rng.uniform(lo, hi))
        for i, (theta, mag) in enumerate(ordered)
    )
    return Schedule(prompts, estimate_session_length(prompts, config.inter_prompt_gap))


def estimate_session_length(prompts, gap: float) -> float:
    """Sum of prompt durations plus one gap leading into each prompt."""
    if hasattr(prompts, "prompts"):
        prompts = prompts.prompts
    return sum(p.duration for p in prompts) + gap * len(prompts)


def prompt_onsets(prompts, gap: float) -> list[float]:
    """Trial-clock onset of each prompt; prompt m occupies (onset, onset + T_m]."""
    if hasattr(prompts, "prompts"):
        prompts = prompts.prompts
    onsets = []
    t = 0.0
    for p in prompts:
        t += gap
        onsets.append(t)
        t += p.duration
    return onsets
