"""Shared domain types: input samples, prompts, trial configuration, outcomes."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, TYPE_CHECKING

if TYPE_CHECKING:
    from .course import CourseSpec
    from .sim import SimParams

TWO_PI = 2.0 * math.pi

#: Names of every outcome measure the engine can produce.
COMMAND_MEASURES = ("t_d", "r_p", "t_s", "a_r", "a_s")
TRAJECTORY_MEASURES = ("s", "v_avg", "t_ob")
MEASURE_NAMES = COMMAND_MEASURES + TRAJECTORY_MEASURES


class ConfigError(ValueError):
    """A trial configuration or course definition violates its invariants."""


class Task(enum.Enum):
    COMMAND_FOLLOWING = "command_following"
    TRAJECTORY_FOLLOWING = "trajectory_following"


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.fmod(a + math.pi, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    r -= math.pi
    return math.pi if r == -math.pi else r


class CommandVector(NamedTuple):
    """One normalized 2D input sample.

    ``t`` is seconds since the enclosing window started (trial or prompt,
    depending on context), stamped at the capture source.  ``ux``/``uy`` are
    dimensionless components in [-1, 1] with overall magnitude <= 1 after
    normalization.
    """

    t: float
    ux: float
    uy: float

    @property
    def magnitude(self) -> float:
        return math.hypot(self.ux, self.uy)

    @property
    def direction(self) -> Optional[float]:
        """Direction in radians, or None for the zero vector (no direction)."""
        if self.ux == 0.0 and self.uy == 0.0:
            return None
        return math.atan2(self.uy, self.ux)


class Pose(NamedTuple):
    """Planar pose of the simulated vehicle; heading wrapped to (-pi, pi]."""

    x: float
    y: float
    heading: float


class TrajectorySample(NamedTuple):
    """One tick of a trajectory run: pose after the step plus the held command."""

    t: float
    pose: Pose
    command: CommandVector
    v: float
    segment_id: Optional[int]
    in_bounds: bool


@dataclass(frozen=True)
class PromptSpec:
    """The m-th target command: direction, optional magnitude, display duration."""

    m: int
    theta_hat: float
    duration: float
    mag_hat: Optional[float] = None

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ConfigError(f"prompt index must be >= 1, got {self.m}")
        if not -math.pi < self.theta_hat <= math.pi:
            raise ConfigError(f"theta_hat {self.theta_hat} outside (-pi, pi]")
        if self.duration <= 0.0:
            raise ConfigError("prompt duration must be positive")
        if self.mag_hat is not None and not 0.0 < self.mag_hat <= 1.0:
            raise ConfigError(f"mag_hat {self.mag_hat} outside (0, 1]")


@dataclass(frozen=True)
class PromptEvent:
    """Scored record of one prompt.

    ``t_first_within`` is the earliest sample time within tolerance,
    ``t_settled`` the earliest time from which every remaining sample stays
    within tolerance.  ``tracked`` is true iff any sample was within
    tolerance.  Sample times are prompt-relative, in (0, duration].
    """

    spec: PromptSpec
    n_samples: int
    tracked: bool
    t_first_within: Optional[float] = None
    t_settled: Optional[float] = None
    initial_accuracy: Optional[float] = None
    settled_accuracy: Optional[float] = None
    samples: tuple[CommandVector, ...] = ()

    def __post_init__(self) -> None:
        if self.tracked != (self.t_first_within is not None):
            raise ValueError("tracked must mirror presence of t_first_within")
        if self.t_first_within is not None and self.t_settled is not None:
            if self.t_first_within > self.t_settled:
                raise ValueError("first-within time cannot exceed settling time")

    def summary(self) -> dict:
        return {
            "m": self.spec.m,
            "theta_hat": self.spec.theta_hat,
            "mag_hat": self.spec.mag_hat,
            "duration": self.spec.duration,
            "n_samples": self.n_samples,
            "tracked": self.tracked,
            "t_first_within": self.t_first_within,
            "t_settled": self.t_settled,
            "initial_accuracy": self.initial_accuracy,
            "settled_accuracy": self.settled_accuracy,
        }


def _default_directions() -> tuple[float, ...]:
    # Four cardinal and four inter-cardinal angles, wrapped to (-pi, pi].
    return tuple(sorted(wrap_angle(k * math.pi / 4.0) for k in range(8)))


@dataclass(frozen=True)
class TrialConfig:
    """Every configurable independent variable of one task run."""

    task: Task = Task.COMMAND_FOLLOWING
    direction_set: tuple[float, ...] = field(default_factory=_default_directions)
    magnitude_set: tuple[float, ...] = ()
    repeats_per_target: int = 20
    prompt_duration_range: tuple[float, float] = (1.0, 2.0)
    inter_prompt_gap: float = 0.5
    tolerance_deg: float = 5.0
    mag_tolerance: float = 0.2
    deadzone: float = 0.1
    sample_rate_hz: float = 50.0
    course: Optional["CourseSpec"] = None
    sim: Optional["SimParams"] = None
    trajectory_timeout: float = 300.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not self.direction_set:
            raise ConfigError("direction_set must not be empty")
        lo, hi = self.prompt_duration_range
        if not 0.0 < lo <= hi:
            raise ConfigError(f"bad prompt_duration_range {self.prompt_duration_range}")
        if self.repeats_per_target < 1:
            raise ConfigError("repeats_per_target must be >= 1")
        if self.tolerance_deg <= 0.0:
            raise ConfigError("tolerance_deg must be positive")
        if self.inter_prompt_gap < 0.0:
            raise ConfigError("inter_prompt_gap must be nonnegative")
        if self.sample_rate_hz <= 0.0:
            raise ConfigError("sample_rate_hz must be positive")
        if not 0.0 <= self.deadzone < 1.0:
            raise ConfigError("deadzone must be in [0, 1)")
        for mag in self.magnitude_set:
            if not 0.0 < mag <= 1.0:
                raise ConfigError(f"magnitude {mag} outside (0, 1]")
            if mag <= self.deadzone:
                raise ConfigError(f"magnitude {mag} not above deadzone {self.deadzone}")
        for theta in self.direction_set:
            if not -math.pi < theta <= math.pi:
                raise ConfigError(f"direction {theta} outside (-pi, pi]")

    @property
    def tolerance_rad(self) -> float:
        return math.radians(self.tolerance_deg)

    @property
    def magnitude_enabled(self) -> bool:
        return bool(self.magnitude_set)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def prompt_count(self) -> int:
        grid = len(self.direction_set) * max(1, len(self.magnitude_set))
        return grid * self.repeats_per_target


#: Declared response scales for the covariate questionnaires.  Items are
#: stored as generic scale definitions (instrument id + integer/text
#: responses), never as verbatim item text.
INSTRUMENTS: dict[str, dict] = {
    "fatigue": {"n_items": 11, "lo": 0, "hi": 3, "aggregation": "sum"},
    "imi": {"n_items": 7, "lo": 1, "hi": 7, "aggregation": "mean"},
    "nasa_tlx_raw": {"n_items": 6, "lo": 0, "hi": 100, "aggregation": "mean"},
    "stress": {"n_items": 20, "lo": 1, "hi": 4, "aggregation": "mean"},
    "confidence": {"n_items": 1, "lo": 1, "hi": 5, "aggregation": "sum"},
    "stimulant_text": {"text": True},
    "interface_name": {"text": True},
    "daily_usage": {"text": True},
}


@dataclass(frozen=True)
class CovariateRecord:
    """One administered questionnaire: generic responses plus aggregate."""

    instrument_id: str
    responses: tuple
    administered_at: str
    raw_total: Optional[float] = None


def make_covariate(instrument_id: str, responses: Sequence, administered_at: str) -> CovariateRecord:
    """Validate responses against the declared scale and compute the aggregate."""
    try:
        decl = INSTRUMENTS[instrument_id]
    except KeyError:
        raise ConfigError(f"unknown instrument {instrument_id!r}") from None
    if decl.get("text"):
        if not all(isinstance(r, str) for r in responses):
            raise ConfigError(f"{instrument_id} expects text responses")
        return CovariateRecord(instrument_id, tuple(responses), administered_at)
    vals = []
    for r in responses:
        if not isinstance(r, int) or isinstance(r, bool):
            raise ConfigError(f"{instrument_id} expects integer responses")
        if not decl["lo"] <= r <= decl["hi"]:
            raise ConfigError(
                f"{instrument_id} response {r} outside [{decl['lo']}, {decl['hi']}]"
            )
        vals.append(r)
    if len(vals) != decl["n_items"]:
        raise ConfigError(
            f"{instrument_id} expects {decl['n_items']} responses, got {len(vals)}"
        )
    total = float(sum(vals))
    if decl["aggregation"] == "mean":
        total /= len(vals)
    return CovariateRecord(instrument_id, tuple(vals), administered_at, total)


@dataclass(frozen=True)
class OutcomeReport:
    """All eight outcome measures plus per-prompt / per-segment detail rows.

    Measures that are undefined for the trial (wrong task, or no qualifying
    prompts) are None, never zero.
    """

    task: Task
    t_d: Optional[float] = None
    r_p: Optional[float] = None
    t_s: Optional[float] = None
    a_r: Optional[float] = None
    a_s: Optional[float] = None
    s: Optional[float] = None
    v_avg: Optional[float] = None
    t_ob: Optional[float] = None
    prompt_count: int = 0
    responded_count: int = 0
    settled_count: int = 0
    per_prompt: tuple[dict, ...] = ()
    per_segment: tuple[dict, ...] = ()

    def __post_init__(self) -> None:
        if self.r_p is not None and not 0.0 <= self.r_p <= 100.0:
            raise ValueError(f"r_p {self.r_p} outside [0, 100]")
        if self.t_ob is not None and not 0.0 <= self.t_ob <= 100.0:
            raise ValueError(f"t_ob {self.t_ob} outside [0, 100]")
        if self.responded_count < self.settled_count:
            raise ValueError("responded_count < settled_count")
        # No aggregate t_d <= t_s check: t_d averages the tracked subset and
        # t_s the settled subset, so a slow tracked-but-unsettled prompt can
        # legitimately push the mean delay past the mean settling time. The
        # relation holds per prompt and is enforced on PromptEvent.
        for name in ("a_r", "a_s"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} {v} outside [0, 1]")
        if self.s is not None and self.s > 0.0:
            raise ValueError("stability must be <= 0")
        if self.v_avg is not None and self.v_avg < 0.0:
            raise ValueError("v_avg must be >= 0")

    def measures(self) -> dict[str, Optional[float]]:
        """Measure name -> value (None when undefined), for this trial's task."""
        names = COMMAND_MEASURES if self.task is Task.COMMAND_FOLLOWING else TRAJECTORY_MEASURES
        return {name: getattr(self, name) for name in names}

    def to_dict(self) -> dict:
        d = {name: getattr(self, name) for name in MEASURE_NAMES}
        d["task"] = self.task.value
        d["prompt_count"] = self.prompt_count
        d["responded_count"] = self.responded_count
        d["settled_count"] = self.settled_count
        d["per_prompt"] = [dict(p) for p in self.per_prompt]
        d["per_segment"] = [dict(p) for p in self.per_segment]
        return d


def normalize_input(raw_ux: float, raw_uy: float, deadzone: float) -> tuple[float, float]:
    """Map a raw two-axis report onto the unit disk.

    Components are clamped to [-1, 1]; anything below the deadzone collapses
    to the zero vector; larger magnitudes keep their direction and are clamped
    to magnitude 1.  Raises ValueError on non-finite input (callers count the
    rejected sample, it is not fatal).
    """
    if not (math.isfinite(raw_ux) and math.isfinite(raw_uy)):
        raise ValueError("non-finite input components")
    ux = min(1.0, max(-1.0, raw_ux))
    uy = min(1.0, max(-1.0, raw_uy))
    mag = math.hypot(ux, uy)
    if mag < deadzone:
        return (0.0, 0.0)
    if mag > 1.0:
        return (ux / mag, uy / mag)
    return (ux, uy)


def command_difference(
    u: CommandVector, prompt: PromptSpec, magnitude_enabled: bool = False
) -> Optional[tuple[float, float]]:
    """Signed angular difference and magnitude difference to the prompt.

    Returns (dtheta, dmag) with |dtheta| <= pi, or None when the command has
    no direction (zero vector) -- a no-direction command is never within
    tolerance.  dmag is 0 when magnitude scoring is off.
    """
    if u.ux == 0.0 and u.uy == 0.0:
        return None
    dtheta = wrap_angle(math.atan2(u.uy, u.ux) - prompt.theta_hat)
    dmag = 0.0
    if magnitude_enabled and prompt.mag_hat is not None:
        dmag = abs(math.hypot(u.ux, u.uy) - prompt.mag_hat)
    return (dtheta, dmag)


def normalized_error(dtheta: float, dmag: float, magnitude_enabled: bool) -> float:
    """Dimensionless command error in [0, 1).

    Direction-only trials use |dtheta|/pi; magnitude trials average the
    angular and magnitude terms so accuracy 1 - e stays in (0, 1].
    """
    e = abs(dtheta) / math.pi
    if magnitude_enabled:
        e = 0.5 * (e + dmag)
    return e


def within_tolerance(u: CommandVector, prompt: PromptSpec, tolerance_rad: float,
                     mag_tolerance: float, magnitude_enabled: bool) -> bool:
    """Conjunctive tolerance test: angular AND (when scored) magnitude."""
    diff = command_difference(u, prompt, magnitude_enabled)
    if diff is None:
        return False
    dtheta, dmag = diff
    if abs(dtheta) > tolerance_rad:
        return False
    if magnitude_enabled and prompt.mag_hat is not None and dmag > mag_tolerance:
        return False
    return True


def config_to_dict(config: TrialConfig) -> dict:
    """Versioned JSON-safe dict for persistence and the wire protocol."""
    from .course import course_to_dict
    from .sim import sim_to_dict

    return {
        "version": 1,
        "task": config.task.value,
        "direction_set": list(config.direction_set),
        "magnitude_set": list(config.magnitude_set),
        "repeats_per_target": config.repeats_per_target,
        "prompt_duration_range": list(config.prompt_duration_range),
        "inter_prompt_gap": config.inter_prompt_gap,
        "tolerance_deg": config.tolerance_deg,
        "mag_tolerance": config.mag_tolerance,
        "deadzone": config.deadzone,
        "sample_rate_hz": config.sample_rate_hz,
        "course": course_to_dict(config.course) if config.course else None,
        "sim": sim_to_dict(config.sim) if config.sim else None,
        "trajectory_timeout": config.trajectory_timeout,
        "rng_seed": config.rng_seed,
    }


def config_from_dict(d: dict) -> TrialConfig:
    from .course import course_from_dict
    from .sim import sim_from_dict

    version = d.get("version", 1)
    if version != 1:
        raise ConfigError(f"unsupported config version {version}")
    return TrialConfig(
        task=Task(d["task"]),
        direction_set=tuple(d["direction_set"]),
        magnitude_set=tuple(d.get("magnitude_set", ())),
        repeats_per_target=d["repeats_per_target"],
        prompt_duration_range=tuple(d["prompt_duration_range"]),
        inter_prompt_gap=d["inter_prompt_gap"],
        tolerance_deg=d["tolerance_deg"],
        mag_tolerance=d["mag_tolerance"],
        deadzone=d["deadzone"],
        sample_rate_hz=d["sample_rate_hz"],
        course=course_from_dict(d["course"]) if d.get("course") else None,
        sim=sim_from_dict(d["sim"]) if d.get("sim") else None,
        trajectory_timeout=d.get("trajectory_timeout", 300.0),
        rng_seed=d["rng_seed"],
    )
