"""Synthetic landmark-stream agents: stand-ins for live users and 2D attackers.

Three behaviours cover the attack taxonomy at landmark level: a photo held to
the camera moves only rigidly (StaticPhoto), a pre-recorded video plays back
regardless of what the screen shows (Replay), and a cooperating person steers
their nose toward the target with reaction latency and imperfect control
(LiveUser). Printed and digital photos are indistinguishable here; their
difference is texture, which this engine never looks at.

Every agent is deterministic given its seed; 20 fps frame cadence by default.
"""

from __future__ import annotations

import math
import statistics
from collections import deque
from dataclasses import dataclass
from random import Random

from .geometry import (
    DEFAULT_R_RATIO,
    TWO_PI,
    BBox,
    LandmarkFrame,
    Point2,
    nose_for_offset,
    validate_frame,
)
from .session import LivenessSession, SessionResult, SessionUpdate

DEFAULT_FRAME_INTERVAL_MS = 50  # 20 fps
DEFAULT_JITTER_PX = 0.5
DEFAULT_GAIN = 0.35
DEFAULT_REACTION_LATENCY_MS = 300

AGENT_KINDS = ("live_user", "static_photo", "replay")


@dataclass(frozen=True)
class FaceModel:
    """A rigid face outline plus the nose rest position."""

    bbox: BBox
    x1: float
    x2: float
    y1: float
    y2: float
    nose_rest: Point2
    frame_interval_ms: int = DEFAULT_FRAME_INTERVAL_MS

    def frame(
        self,
        t_ms: int,
        *,
        nose: Point2 | None = None,
        shift_x: float = 0.0,
        shift_y: float = 0.0,
    ) -> LandmarkFrame:
        """Emit one frame: optional nose override, optional rigid shift."""
        if nose is None:
            nose = self.nose_rest
        return LandmarkFrame(
            t_ms=t_ms,
            bbox=BBox(
                self.bbox.x_min + shift_x,
                self.bbox.y_min + shift_y,
                self.bbox.width,
                self.bbox.height,
            ),
            x1=self.x1 + shift_x,
            x2=self.x2 + shift_x,
            y1=self.y1 + shift_y,
            y2=self.y2 + shift_y,
            m=Point2(nose.x + shift_x, nose.y + shift_y),
        )

    @property
    def a(self) -> float:
        return (self.x2 - self.x1) * 0.5

    @property
    def b(self) -> float:
        return (self.y2 - self.y1) * 0.5


def default_face_model() -> FaceModel:
    """A centered, symmetric face in a 640x480 camera frame (zero rest offset)."""
    return FaceModel(
        bbox=BBox(220.0, 120.0, 200.0, 240.0),
        x1=240.0,
        x2=400.0,
        y1=160.0,
        y2=340.0,
        nose_rest=Point2(320.0, 250.0),
    )


def random_face_model(
    rng: Random,
    *,
    r_ratio: float = DEFAULT_R_RATIO,
    frame_interval_ms: int = DEFAULT_FRAME_INTERVAL_MS,
) -> FaceModel:
    """Sample a plausible face: taller than wide, nose rest well inside the
    miss-guarantee margin so a rigidly moving copy of it can never score."""
    w_face = rng.uniform(120.0, 260.0)
    h_face = w_face * rng.uniform(1.05, 1.35)
    cx = rng.uniform(250.0, 400.0)
    cy = rng.uniform(200.0, 320.0)
    x1 = cx - w_face * 0.5
    x2 = cx + w_face * 0.5
    y1 = cy - h_face * 0.5
    y2 = cy + h_face * 0.5
    pad_x = w_face * rng.uniform(0.02, 0.10)
    pad_y = h_face * rng.uniform(0.02, 0.10)
    a = w_face * 0.5
    b = h_face * 0.5
    margin = min(a, b) - r_ratio * a
    rho = rng.uniform(0.0, 0.5 * margin)
    ang = rng.uniform(0.0, TWO_PI)
    nose = nose_for_offset(x1, x2, y1, y2, rho * math.cos(ang), rho * math.sin(ang))
    model = FaceModel(
        bbox=BBox(x1 - pad_x, y1 - pad_y, w_face + 2.0 * pad_x, h_face + 2.0 * pad_y),
        x1=x1,
        x2=x2,
        y1=y1,
        y2=y2,
        nose_rest=nose,
        frame_interval_ms=frame_interval_ms,
    )
    validate_frame(model.frame(0))
    return model


class StaticPhotoAgent:
    """A photo in front of the camera: rest pose plus whole-frame rigid jitter.

    The same (dx, dy) lands on every coordinate, so the pose offset c2 - c1
    is exactly constant no matter how the photo is waved around.
    """

    def __init__(self, face: FaceModel, *, jitter_px: float = DEFAULT_JITTER_PX, seed: int = 0):
        self.face = face
        self.jitter_px = jitter_px
        self._rng = Random(seed)
        self._k = 0

    def step(self, observation: SessionUpdate | None = None) -> LandmarkFrame:
        t = self._k * self.face.frame_interval_ms
        self._k += 1
        dx = self._rng.gauss(0.0, self.jitter_px)
        dy = self._rng.gauss(0.0, self.jitter_px)
        return self.face.frame(t, shift_x=dx, shift_y=dy)


class ReplayAgent:
    """Plays back a recorded trajectory, blind to the screen.

    Output is a function of (trajectory, frame index) only. Once exhausted it
    keeps re-emitting the final frame's geometry with time still advancing
    (a paused video on screen), stepped by the recording's median interval.
    """

    def __init__(self, trajectory: list[LandmarkFrame]):
        if not trajectory:
            raise ValueError("replay trajectory must contain at least one frame")
        self.trajectory = trajectory
        self._k = 0
        deltas = [
            b.t_ms - a.t_ms
            for a, b in zip(trajectory, trajectory[1:])
            if b.t_ms > a.t_ms
        ]
        self._tail_interval = max(1, round(statistics.median(deltas))) if deltas else DEFAULT_FRAME_INTERVAL_MS

    def step(self, observation: SessionUpdate | None = None) -> LandmarkFrame:
        k = self._k
        self._k += 1
        traj = self.trajectory
        if k < len(traj):
            return traj[k]
        last = traj[-1]
        extra = k - len(traj) + 1
        return LandmarkFrame(
            t_ms=last.t_ms + extra * self._tail_interval,
            bbox=last.bbox,
            x1=last.x1,
            x2=last.x2,
            y1=last.y1,
            y2=last.y2,
            m=last.m,
        )


class LiveUserAgent:
    """A cooperating person: sees the circle with some reaction latency, then
    steers the nose toward it with proportional control plus motor noise.

    nose_next = nose + gain * (target_nose - nose) + N(0, noise_px) per axis,
    where target_nose is the pose-arithmetic inversion of the offset that
    would put the dot on the circle center.
    """

    def __init__(
        self,
        face: FaceModel,
        *,
        gain: float = DEFAULT_GAIN,
        reaction_latency_ms: int = DEFAULT_REACTION_LATENCY_MS,
        noise_px: float = DEFAULT_JITTER_PX,
        seed: int = 0,
    ):
        if not 0.0 < gain <= 1.0:
            raise ValueError(f"gain must be in (0, 1], got {gain}")
        if reaction_latency_ms < 0:
            raise ValueError(f"reaction_latency_ms must be >= 0, got {reaction_latency_ms}")
        self.face = face
        self.gain = gain
        self.reaction_latency_ms = reaction_latency_ms
        self.noise_px = noise_px
        self._rng = Random(seed)
        self._nose_x = face.nose_rest.x
        self._nose_y = face.nose_rest.y
        self._c1 = face.bbox.center
        self._k = 0
        self._seen: deque[tuple[int, float, float]] = deque()

    def step(self, observation: SessionUpdate | None = None) -> LandmarkFrame:
        face = self.face
        t = self._k * face.frame_interval_ms
        self._k += 1
        if observation is not None and observation.circle_x is not None:
            self._seen.append((observation.t_ms, observation.circle_x, observation.circle_y))

        cutoff = t - self.reaction_latency_ms
        seen = self._seen
        while len(seen) >= 2 and seen[1][0] <= cutoff:
            seen.popleft()
        if seen and seen[0][0] <= cutoff:
            _, cx, cy = seen[0]
            target = nose_for_offset(
                face.x1, face.x2, face.y1, face.y2,
                cx - self._c1.x, cy - self._c1.y,
            )
        else:
            target = face.nose_rest  # nothing seen yet: settle at neutral

        gain = self.gain
        nx = self._nose_x + gain * (target.x - self._nose_x)
        ny = self._nose_y + gain * (target.y - self._nose_y)
        if self.noise_px > 0.0:
            nx += self._rng.gauss(0.0, self.noise_px)
            ny += self._rng.gauss(0.0, self.noise_px)
        self._nose_x = nx
        self._nose_y = ny
        return face.frame(t, nose=Point2(nx, ny))


Agent = StaticPhotoAgent | ReplayAgent | LiveUserAgent


def make_agent(
    kind: str,
    face: FaceModel,
    seed: int = 0,
    *,
    trajectory: list[LandmarkFrame] | None = None,
    **params,
) -> Agent:
    """Build an agent by class name ("live_user", "static_photo", "replay")."""
    if kind == "live_user":
        return LiveUserAgent(face, seed=seed, **params)
    if kind == "static_photo":
        return StaticPhotoAgent(face, seed=seed, **params)
    if kind == "replay":
        if trajectory is None:
            raise ValueError("replay agent requires a trajectory")
        return ReplayAgent(trajectory)
    raise ValueError(f"unknown agent kind {kind!r}; expected one of {AGENT_KINDS}")


def agent_step(agent: Agent, observation: SessionUpdate | None = None) -> LandmarkFrame:
    return agent.step(observation)


def drive_session(
    session: LivenessSession,
    agent: Agent,
    *,
    max_steps: int = 100_000,
) -> tuple[SessionResult, list[LandmarkFrame]]:
    """Closed loop: the agent emits frames, the session answers with updates,
    until a terminal verdict. Returns the result and the emitted frames."""
    frames: list[LandmarkFrame] = []
    observation: SessionUpdate | None = None
    for _ in range(max_steps):
        frame = agent.step(observation)
        frames.append(frame)
        observation = session.ingest(frame)
        if observation.status.terminal:
            return session.result(), frames
    raise RuntimeError(f"no terminal verdict after {max_steps} agent steps")
