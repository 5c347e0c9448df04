"""liveness-gate: active 2D presentation-attack detection.

A randomized dot-into-circle head-pose challenge: the dot tracks the user's
head pose from five facial landmarks, the circle lands on a half-ellipse in
a randomly drawn direction opposite the current pose, and liveness means
fitting the dot into the circle enough times before the timer runs out.
Deterministic engine (frame time + seed), attack-simulation agents, ISO-style
error-rate evaluation, a batch CLI, and a WebSocket session gateway.
"""

from .geometry import (
    BBox,
    Challenge,
    InvalidFrameError,
    LandmarkFrame,
    Point2,
    PoseState,
    compute_pose_state,
    hit_test,
    nose_for_offset,
    sample_theta,
    target_circle,
    validate_frame,
)
from .session import (
    ConfigError,
    LivenessSession,
    NotFinishedError,
    SessionConfig,
    SessionEvent,
    SessionResult,
    SessionState,
    SessionStatus,
    SessionUpdate,
    SessionFinishedError,
    StaleFrameError,
    start_session,
)
from .agents import (
    FaceModel,
    LiveUserAgent,
    ReplayAgent,
    StaticPhotoAgent,
    agent_step,
    default_face_model,
    drive_session,
    make_agent,
    random_face_model,
)
from .metrics import (
    ConfusionCounts,
    EvalReport,
    TrialOutcome,
    UndefinedRateError,
    batch_evaluate,
    compute_metrics,
    derive_seed,
    run_agent_trials,
)
from .trajectory import (
    TrajectoryError,
    dumps_frame,
    frame_from_obj,
    frame_to_obj,
    parse_frame_line,
    read_trajectory,
    write_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "Challenge",
    "ConfigError",
    "ConfusionCounts",
    "EvalReport",
    "FaceModel",
    "InvalidFrameError",
    "LandmarkFrame",
    "LiveUserAgent",
    "LivenessSession",
    "NotFinishedError",
    "Point2",
    "PoseState",
    "ReplayAgent",
    "SessionConfig",
    "SessionEvent",
    "SessionFinishedError",
    "SessionResult",
    "SessionState",
    "SessionStatus",
    "SessionUpdate",
    "StaleFrameError",
    "StaticPhotoAgent",
    "TrajectoryError",
    "TrialOutcome",
    "UndefinedRateError",
    "agent_step",
    "batch_evaluate",
    "compute_metrics",
    "compute_pose_state",
    "default_face_model",
    "derive_seed",
    "drive_session",
    "dumps_frame",
    "frame_from_obj",
    "frame_to_obj",
    "hit_test",
    "make_agent",
    "nose_for_offset",
    "parse_frame_line",
    "random_face_model",
    "read_trajectory",
    "run_agent_trials",
    "sample_theta",
    "start_session",
    "target_circle",
    "validate_frame",
    "write_trajectory",
]
