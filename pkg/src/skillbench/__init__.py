"""skillbench: assessment engine for human skill with 2D control interfaces.

Administers two interface-skill tasks (command following against prompted
target commands, trajectory following with a simulated wheelchair on marked
courses), computes all eight closed-form outcome measures online, persists
raw data, and serves live sessions to a browser UI over WebSocket.
"""

from .model import (
    CommandVector,
    ConfigError,
    CovariateRecord,
    MEASURE_NAMES,
    OutcomeReport,
    Pose,
    PromptEvent,
    PromptSpec,
    Task,
    TrajectorySample,
    TrialConfig,
    command_difference,
    normalize_input,
)
from .schedule import Schedule, build_schedule, estimate_session_length
from .command_scoring import (
    CommandScore,
    StreamingCommandScorer,
    aggregate,
    batch_score,
    score_prompt,
)
from .sim import SimParams, run_trace, step
from .course import (
    CourseSpec,
    build_curved_course,
    build_square_course,
    footprint_in_bounds,
    locate_segment,
    visible_window,
)
from .trajectory_scoring import (
    TrajectoryScore,
    average_speed,
    out_of_bounds_percent,
    score_trajectory,
    stability,
)
from .synthetic import OperatorModel, drive, respond, synthesize_trial
from .store import SessionStore, StoreError, TrialBundle
from .scoring import score_bundle
from .service import Session, normalize_gamepad

__version__ = "0.1.0"

__all__ = [
    "CommandScore",
    "CommandVector",
    "ConfigError",
    "CourseSpec",
    "CovariateRecord",
    "MEASURE_NAMES",
    "OperatorModel",
    "OutcomeReport",
    "Pose",
    "PromptEvent",
    "PromptSpec",
    "Schedule",
    "Session",
    "SessionStore",
    "SimParams",
    "StoreError",
    "StreamingCommandScorer",
    "Task",
    "TrajectorySample",
    "TrajectoryScore",
    "TrialBundle",
    "TrialConfig",
    "aggregate",
    "average_speed",
    "batch_score",
    "build_curved_course",
    "build_schedule",
    "build_square_course",
    "command_difference",
    "drive",
    "estimate_session_length",
    "footprint_in_bounds",
    "locate_segment",
    "normalize_gamepad",
    "normalize_input",
    "out_of_bounds_percent",
    "respond",
    "run_trace",
    "score_bundle",
    "score_prompt",
    "score_trajectory",
    "stability",
    "step",
    "synthesize_trial",
    "visible_window",
]
