"""The liveness test state machine.

A session consumes a stream of landmark frames, keeps the challenge/timer/fit
bookkeeping, and ends in exactly one terminal verdict. Time is frame time
(t_ms), never wall clock, so a (seed, frame stream) pair fully determines the
verdict and the event log; the serving layer maps wall clock to t_ms at the
edge.

One session is a single logical thread: callers serialize ingest/tick/abort
per session. Distinct sessions are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from random import Random

from . import jsonio
from .geometry import (
    DEFAULT_R_RATIO,
    THREE_HALF_PI,
    TWO_PI,
    Challenge,
    LandmarkFrame,
    Point2,
)

_PI = math.pi
_cos = math.cos
_sin = math.sin


class SessionStatus(str, Enum):
    AWAITING_FACE = "AwaitingFace"
    ACTIVE = "Active"
    PASSED = "Passed"
    FAILED_TIMEOUT = "FailedTimeout"
    FAILED_FACE_LOST = "FailedFaceLost"
    ABORTED = "Aborted"

    @property
    def terminal(self) -> bool:
        return self in _TERMINAL


_AWAITING = SessionStatus.AWAITING_FACE
_ACTIVE = SessionStatus.ACTIVE
_PASSED = SessionStatus.PASSED
_FAILED_TIMEOUT = SessionStatus.FAILED_TIMEOUT
_FAILED_FACE_LOST = SessionStatus.FAILED_FACE_LOST
_ABORTED = SessionStatus.ABORTED
_TERMINAL = frozenset({_PASSED, _FAILED_TIMEOUT, _FAILED_FACE_LOST, _ABORTED})


class ConfigError(ValueError):
    """Session configuration violates an invariant."""


class StaleFrameError(ValueError):
    """Frame t_ms went backwards; the session is unchanged."""


class SessionFinishedError(RuntimeError):
    """Ingest/tick/abort called on a session already in a terminal state."""


class NotFinishedError(RuntimeError):
    """Result requested before the session reached a terminal state."""


_CONFIG_FIELDS = (
    "timeout_ms",
    "required_fits",
    "dwell_frames",
    "r_ratio",
    "max_face_lost_ms",
    "seed",
)


@dataclass(frozen=True)
class SessionConfig:
    timeout_ms: int = 15000
    required_fits: int = 3
    dwell_frames: int = 3
    r_ratio: float = DEFAULT_R_RATIO
    max_face_lost_ms: int = 2000
    seed: int = 0

    def validate(self) -> None:
        if not isinstance(self.timeout_ms, int) or self.timeout_ms <= 0:
            raise ConfigError(f"timeout_ms must be a positive integer, got {self.timeout_ms!r}")
        if not isinstance(self.required_fits, int) or self.required_fits < 1:
            raise ConfigError(f"required_fits must be >= 1, got {self.required_fits!r}")
        if not isinstance(self.dwell_frames, int) or self.dwell_frames < 1:
            raise ConfigError(f"dwell_frames must be >= 1, got {self.dwell_frames!r}")
        if not (isinstance(self.r_ratio, (int, float)) and 0.0 < self.r_ratio <= 1.0):
            raise ConfigError(f"r_ratio must be in (0, 1], got {self.r_ratio!r}")
        if not isinstance(self.max_face_lost_ms, int) or self.max_face_lost_ms <= 0:
            raise ConfigError(
                f"max_face_lost_ms must be a positive integer, got {self.max_face_lost_ms!r}"
            )
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2**64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in _CONFIG_FIELDS}

    @classmethod
    def from_dict(cls, data: dict) -> "SessionConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
        unknown = sorted(set(data) - set(_CONFIG_FIELDS))
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def replace(self, **overrides) -> "SessionConfig":
        merged = self.to_dict()
        merged.update(overrides)
        return SessionConfig.from_dict(merged)


@dataclass(frozen=True)
class SessionEvent:
    t_ms: int
    kind: str
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SessionState:
    """Point-in-time snapshot of the machine."""

    status: SessionStatus
    fits_completed: int
    dwell_progress: int
    challenge: Challenge | None
    started_at_ms: int | None
    last_face_ms: int | None


@dataclass(slots=True)
class SessionUpdate:
    """Per-observation engine output: where the dot and circle are now.

    dot/circle fields are None when no geometry was computed for this
    observation (no usable face yet, or the observation tripped a terminal
    rule before geometry).
    """

    t_ms: int
    status: SessionStatus
    dot_x: float | None
    dot_y: float | None
    circle_x: float | None
    circle_y: float | None
    circle_r: float | None
    hit: bool
    fits_completed: int
    dwell_progress: int
    remaining_ms: int

    @property
    def dot(self) -> Point2 | None:
        if self.dot_x is None:
            return None
        return Point2(self.dot_x, self.dot_y)

    @property
    def circle(self) -> tuple[Point2, float] | None:
        if self.circle_x is None:
            return None
        return Point2(self.circle_x, self.circle_y), self.circle_r


@dataclass(frozen=True)
class SessionResult:
    verdict: SessionStatus
    label_live: bool
    events: list[SessionEvent]


class LivenessSession:
    """Algorithm: first valid face starts the timer and the first challenge;
    every frame re-anchors the circle on the current pose with the fixed
    theta and hit-tests the dot; dwell_frames consecutive hits complete a
    fit and draw a fresh theta opposite the current pose; required_fits
    fits pass, an exceeded timer or a face gap fail.
    """

    __slots__ = (
        "_timeout_ms",
        "_required_fits",
        "_dwell_frames",
        "_r_ratio",
        "_max_face_lost_ms",
        "_seed",
        "_rng",
        "_status",
        "_fits",
        "_dwell",
        "_theta",
        "_cos_t",
        "_sin_t",
        "_challenge_at",
        "_started_at",
        "_last_face",
        "_last_t",
        "_events",
    )

    def __init__(self, config: SessionConfig):
        config.validate()
        self._timeout_ms = config.timeout_ms
        self._required_fits = config.required_fits
        self._dwell_frames = config.dwell_frames
        self._r_ratio = config.r_ratio
        self._max_face_lost_ms = config.max_face_lost_ms
        self._seed = config.seed
        self._rng = Random(config.seed)
        self._status = _AWAITING
        self._fits = 0
        self._dwell = 0
        self._theta = None
        self._cos_t = 0.0
        self._sin_t = 0.0
        self._challenge_at = 0
        self._started_at = None
        self._last_face = None
        self._last_t = 0
        self._events: list[tuple] = []

    # -- properties ---------------------------------------------------------

    @property
    def status(self) -> SessionStatus:
        return self._status

    @property
    def fits_completed(self) -> int:
        return self._fits

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def config(self) -> SessionConfig:
        return SessionConfig(
            timeout_ms=self._timeout_ms,
            required_fits=self._required_fits,
            dwell_frames=self._dwell_frames,
            r_ratio=self._r_ratio,
            max_face_lost_ms=self._max_face_lost_ms,
            seed=self._seed,
        )

    def state(self) -> SessionState:
        challenge = None
        if self._theta is not None:
            challenge = Challenge(self._theta, self._r_ratio, self._challenge_at)
        return SessionState(
            status=self._status,
            fits_completed=self._fits,
            dwell_progress=self._dwell,
            challenge=challenge,
            started_at_ms=self._started_at,
            last_face_ms=self._last_face,
        )

    # -- the per-frame hot path ---------------------------------------------

    def ingest(self, frame: LandmarkFrame) -> SessionUpdate:
        """Process one landmark frame; returns where the dot/circle are now.

        A geometrically invalid frame counts as a missing-face observation
        at its timestamp: it advances session time but no geometry runs.
        """
        status = self._status
        if status is not _ACTIVE and status is not _AWAITING:
            raise SessionFinishedError(f"session already terminal ({status.value})")
        t = frame.t_ms
        if t < self._last_t:
            raise StaleFrameError(f"t_ms went backwards: {t} < {self._last_t}")
        self._last_t = t

        if status is _ACTIVE:
            if t - self._started_at > self._timeout_ms:
                return self._finish(_FAILED_TIMEOUT, t)
            if t - self._last_face > self._max_face_lost_ms:
                return self._finish(_FAILED_FACE_LOST, t)

        bbox = frame.bbox
        x1 = frame.x1
        x2 = frame.x2
        y1 = frame.y1
        y2 = frame.y2
        m = frame.m
        mx = m.x
        my = m.y
        w = bbox.width
        h = bbox.height
        s = bbox.x_min + bbox.y_min + w + h + x1 + x2 + y1 + y2 + mx + my
        if not (s - s == 0.0 and w > 0.0 and h > 0.0 and x1 < x2 and y1 < y2 and t >= 0):
            # missing/invalid face: time already advanced, nothing else moves
            return self._no_geometry_update(t)

        c1x = bbox.x_min + w * 0.5
        c1y = bbox.y_min + h * 0.5
        c2x = c1x + (abs(x1 - mx) - abs(x2 - mx))
        c2y = c1y + (abs(y1 - my) - abs(y2 - my))
        a = (x2 - x1) * 0.5
        b = (y2 - y1) * 0.5

        events = self._events
        if status is _AWAITING:
            self._status = _ACTIVE
            self._started_at = t
            events.append(("SessionStarted", t))
            self._issue_challenge(t, c1x, c2x)
        self._last_face = t

        cx = a * self._cos_t + c1x
        cy = b * self._sin_t + c1y
        r = self._r_ratio * a
        dx = c2x - cx
        dy = c2y - cy
        hit = dx * dx + dy * dy <= r * r
        events.append(("FrameProcessed", t, c2x, c2y, cx, cy, r, hit))

        if hit:
            dwell = self._dwell + 1
            if dwell >= self._dwell_frames:
                fits = self._fits + 1
                self._fits = fits
                self._dwell = 0
                events.append(("FitCompleted", t, fits))
                if fits >= self._required_fits:
                    self._status = _PASSED
                    events.append(("Verdict", t, _PASSED.value))
                    return SessionUpdate(
                        t, _PASSED, c2x, c2y, cx, cy, r, True, fits, 0,
                        self._remaining(t),
                    )
                # fresh challenge, opposed to the pose that just completed
                self._issue_challenge(t, c1x, c2x)
                cx = a * self._cos_t + c1x
                cy = b * self._sin_t + c1y
            else:
                self._dwell = dwell
        else:
            self._dwell = 0

        return SessionUpdate(
            t, _ACTIVE, c2x, c2y, cx, cy, r, hit, self._fits, self._dwell,
            self._remaining(t),
        )

    def tick(self, t_ms: int) -> SessionUpdate:
        """Observe time passing without a usable face (gateway watchdog,
        replay of a truncated stream). Same terminal rules as ingest."""
        status = self._status
        if status is not _ACTIVE and status is not _AWAITING:
            raise SessionFinishedError(f"session already terminal ({status.value})")
        if t_ms < self._last_t:
            raise StaleFrameError(f"t_ms went backwards: {t_ms} < {self._last_t}")
        self._last_t = t_ms
        if status is _ACTIVE:
            if t_ms - self._started_at > self._timeout_ms:
                return self._finish(_FAILED_TIMEOUT, t_ms)
            if t_ms - self._last_face > self._max_face_lost_ms:
                return self._finish(_FAILED_FACE_LOST, t_ms)
        return self._no_geometry_update(t_ms)

    def abort(self, t_ms: int | None = None) -> SessionUpdate:
        """Terminate the session as Aborted (client hang-up, protocol
        violation). Timestamp defaults to the last observed session time."""
        status = self._status
        if status is not _ACTIVE and status is not _AWAITING:
            raise SessionFinishedError(f"session already terminal ({status.value})")
        t = self._last_t if t_ms is None else max(t_ms, self._last_t)
        self._last_t = t
        return self._finish(_ABORTED, t)

    # -- terminal-state accessors -------------------------------------------

    def result(self) -> SessionResult:
        if self._status not in _TERMINAL:
            raise NotFinishedError(f"session still {self._status.value}")
        return SessionResult(
            verdict=self._status,
            label_live=self._status is _PASSED,
            events=self.events(),
        )

    def events(self) -> list[SessionEvent]:
        return [SessionEvent(ev[1], ev[0], _event_payload(ev)) for ev in self._events]

    def event_log_lines(self) -> list[str]:
        return [
            jsonio.dumps({"t_ms": ev[1], "kind": ev[0], "payload": _event_payload(ev)})
            for ev in self._events
        ]

    def event_log_text(self) -> str:
        lines = self.event_log_lines()
        return "\n".join(lines) + "\n" if lines else ""

    # -- internals ------------------------------------------------------------

    def _issue_challenge(self, t: int, c1x: float, c2x: float) -> None:
        if c1x >= c2x:
            theta = self._rng.uniform(THREE_HALF_PI, TWO_PI)
        else:
            theta = self._rng.uniform(_PI, THREE_HALF_PI)
        self._theta = theta
        self._cos_t = _cos(theta)
        self._sin_t = _sin(theta)
        self._challenge_at = t
        self._events.append(("ChallengeIssued", t, theta))

    def _finish(self, status: SessionStatus, t: int) -> SessionUpdate:
        self._status = status
        self._events.append(("Verdict", t, status.value))
        return SessionUpdate(
            t, status, None, None, None, None, None, False, self._fits,
            self._dwell, self._remaining(t),
        )

    def _no_geometry_update(self, t: int) -> SessionUpdate:
        return SessionUpdate(
            t, self._status, None, None, None, None, None, False, self._fits,
            self._dwell, self._remaining(t),
        )

    def _remaining(self, t: int) -> int:
        if self._started_at is None:
            return self._timeout_ms
        left = self._timeout_ms - (t - self._started_at)
        return left if left > 0 else 0


def _event_payload(ev: tuple) -> dict:
    kind = ev[0]
    if kind == "FrameProcessed":
        return {
            "dot": {"x": ev[2], "y": ev[3]},
            "circle": {"x": ev[4], "y": ev[5], "r": ev[6]},
            "hit": ev[7],
        }
    if kind == "ChallengeIssued":
        return {"theta": ev[2]}
    if kind == "FitCompleted":
        return {"n": ev[2]}
    if kind == "Verdict":
        return {"status": ev[2]}
    return {}


def start_session(config: SessionConfig) -> LivenessSession:
    """Validate the config and return a fresh session in AwaitingFace."""
    return LivenessSession(config)
