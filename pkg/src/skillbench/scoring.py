"""Batch scoring of whole trials, from stored bundles or raw JSON lines."""
from __future__ import annotations

import json
from typing import Sequence

from .command_scoring import batch_score
from .course import build_square_course
from .model import (
    CommandVector,
    ConfigError,
    OutcomeReport,
    Pose,
    Task,
    TrajectorySample,
    TrialConfig,
    config_from_dict,
)
from .schedule import build_schedule
from .store import TrialBundle
from .trajectory_scoring import score_trajectory


def score_command_trial(config: TrialConfig, samples: Sequence[CommandVector]) -> OutcomeReport:
    """Re-score a command trial from its config and trial-clock sample log.

    The schedule rebuilds deterministically from the config seed, so the
    stored samples are sufficient raw data.
    """
    schedule = build_schedule(config)
    return batch_score(samples, schedule, config).report()


def score_trajectory_trial(
    config: TrialConfig, samples: Sequence[TrajectorySample]
) -> OutcomeReport:
    course = config.course or build_square_course()
    return score_trajectory(list(samples), course).report()


def score_bundle(bundle: TrialBundle) -> OutcomeReport:
    if bundle.task is Task.COMMAND_FOLLOWING:
        return score_command_trial(bundle.config, bundle.command_samples)
    return score_trajectory_trial(bundle.config, bundle.trajectory_samples)


def bundle_from_jsonl(text: str) -> TrialBundle:
    """Parse the JSON-lines trial export back into a scoreable bundle."""
    header = None
    command_samples: list[CommandVector] = []
    trajectory_samples: list[TrajectorySample] = []
    config: TrialConfig | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        kind = obj.get("kind")
        if kind == "trial":
            if header is not None:
                raise ConfigError(f"line {lineno}: second trial header; one trial per file")
            header = obj
            config = config_from_dict(obj["config"])
        elif kind == "prompt":
            continue  # prompts rebuild from the config seed
        elif kind == "sample":
            if config is None:
                raise ConfigError(f"line {lineno}: sample before trial header")
            if "pose_x" in obj:
                v_max = config.sim.v_max if config.sim else 1.0
                trajectory_samples.append(
                    TrajectorySample(
                        t=obj["t"],
                        pose=Pose(obj["pose_x"], obj["pose_y"], obj["heading"]),
                        command=CommandVector(obj["t"], obj["ux"], obj["uy"]),
                        v=abs(obj["uy"]) * v_max,
                        segment_id=obj.get("segment_id"),
                        in_bounds=bool(obj.get("in_bounds", True)),
                    )
                )
            else:
                command_samples.append(CommandVector(obj["t"], obj["ux"], obj["uy"]))
        else:
            raise ConfigError(f"line {lineno}: unknown record kind {kind!r}")
    if header is None or config is None:
        raise ConfigError("no trial header found")
    return TrialBundle(
        user=header.get("user", "anonymous"),
        config=config,
        started_at=header.get("started_at", "1970-01-01T00:00:00"),
        prompts=tuple(build_schedule(config).prompts) if config.task is Task.COMMAND_FOLLOWING else (),
        command_samples=command_samples,
        trajectory_samples=trajectory_samples,
        trial_id=header.get("trial_id"),
    )
