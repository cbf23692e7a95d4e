import math
from collections import Counter

import pytest

from skillbench.model import ConfigError, TrialConfig
from skillbench.schedule import build_schedule, estimate_session_length, prompt_onsets


def _targets(schedule):
    return [(p.theta_hat, p.mag_hat) for p in schedule.prompts]


def test_default_schedule_is_160_prompts_each_direction_20():
    cfg = TrialConfig(rng_seed=1)
    sched = build_schedule(cfg)
    assert len(sched) == 160
    counts = Counter(p.theta_hat for p in sched.prompts)
    assert all(c == 20 for c in counts.values())
    assert len(counts) == 8


def test_single_target_single_repeat():
    cfg = TrialConfig(direction_set=(0.0,), repeats_per_target=1, rng_seed=0)
    assert len(build_schedule(cfg)) == 1


def test_crossed_magnitude_balance_by_exhaustive_tally():
    cfg = TrialConfig(
        direction_set=(0.0, math.pi / 2, math.pi, -math.pi / 2),
        magnitude_set=(0.5, 1.0),
        repeats_per_target=3,
        rng_seed=7,
    )
    sched = build_schedule(cfg)
    assert len(sched) == 24
    counts = Counter(_targets(sched))
    assert len(counts) == 8
    assert all(c == 3 for c in counts.values())


@pytest.mark.parametrize("seed", range(6))
def test_block_property(seed):
    cfg = TrialConfig(repeats_per_target=5, rng_seed=seed)
    sched = build_schedule(cfg)
    grid = len(cfg.direction_set)
    for b in range(cfg.repeats_per_target):
        block = _targets(sched)[b * grid : (b + 1) * grid]
        assert len(set(block)) == grid


@pytest.mark.parametrize("seed", range(10))
def test_no_consecutive_duplicate_targets(seed):
    cfg = TrialConfig(repeats_per_target=10, rng_seed=seed)
    targets = _targets(build_schedule(cfg))
    assert all(a != b for a, b in zip(targets, targets[1:]))


def test_determinism_bit_for_bit():
    cfg = TrialConfig(rng_seed=123)
    assert build_schedule(cfg) == build_schedule(cfg)


def test_different_seeds_differ():
    a = build_schedule(TrialConfig(rng_seed=1))
    b = build_schedule(TrialConfig(rng_seed=2))
    assert _targets(a) != _targets(b) or [p.duration for p in a.prompts] != [
        p.duration for p in b.prompts
    ]


def test_durations_within_configured_range():
    cfg = TrialConfig(prompt_duration_range=(1.0, 2.0), rng_seed=3)
    sched = build_schedule(cfg)
    assert all(1.0 <= p.duration <= 2.0 for p in sched.prompts)


def test_estimate_matches_default_session_scale():
    # 160 prompts averaging 1.5 s plus a 0.5 s gap each: about 320 s.
    sched = build_schedule(TrialConfig(rng_seed=11))
    est = estimate_session_length(sched, 0.5)
    assert est == pytest.approx(sum(p.duration for p in sched.prompts) + 80.0)
    assert 240.0 <= est <= 360.0


def test_estimate_empty_and_trivial():
    assert estimate_session_length([], 0.5) == 0.0
    cfg = TrialConfig(
        direction_set=(0.0,), repeats_per_target=1,
        prompt_duration_range=(2.0, 2.0), inter_prompt_gap=0.0, rng_seed=0,
    )
    assert estimate_session_length(build_schedule(cfg), 0.0) == 2.0


def test_onsets_disjoint_and_gap_spaced():
    cfg = TrialConfig(repeats_per_target=2, rng_seed=5)
    sched = build_schedule(cfg)
    onsets = prompt_onsets(sched, cfg.inter_prompt_gap)
    assert onsets[0] == cfg.inter_prompt_gap
    for i in range(1, len(onsets)):
        prev_end = onsets[i - 1] + sched.prompts[i - 1].duration
        assert onsets[i] == pytest.approx(prev_end + cfg.inter_prompt_gap)


def test_empty_direction_set_is_config_error():
    with pytest.raises(ConfigError):
        TrialConfig(direction_set=())
