"""Pose geometry for the dot-into-circle head challenge.

Everything here is pure and stateless: five facial landmarks plus the face
bounding box go in, a pose summary (dot position, half-ellipse axes) comes
out. Screen/image coordinates throughout: origin top-left, y grows downward,
so angles in (pi, 2*pi) land on the *upper* half of the ellipse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random

TWO_PI = 2.0 * math.pi
THREE_HALF_PI = 1.5 * math.pi

DEFAULT_R_RATIO = 0.15


class InvalidFrameError(ValueError):
    """A landmark frame failed its geometric sanity checks."""


@dataclass(frozen=True, slots=True)
class Point2:
    x: float
    y: float


@dataclass(frozen=True, slots=True)
class BBox:
    """Axis-aligned face bounding box in pixels."""

    x_min: float
    y_min: float
    width: float
    height: float

    @property
    def center(self) -> Point2:
        return Point2(self.x_min + self.width * 0.5, self.y_min + self.height * 0.5)


@dataclass(frozen=True, slots=True)
class LandmarkFrame:
    """One timestamped face observation.

    x1/x2 are the x of the left/right face side, y1/y2 the y of mid-forehead /
    mid-chin, m the nose tip. Invariants: x1 < x2, y1 < y2, all finite,
    t_ms >= 0.
    """

    t_ms: int
    bbox: BBox
    x1: float
    x2: float
    y1: float
    y2: float
    m: Point2


@dataclass(frozen=True, slots=True)
class PoseState:
    """Per-frame geometric summary: dot position and half-ellipse axes."""

    c1: Point2  # bbox center
    c2: Point2  # pose-determining box center (the dot)
    a: float  # horizontal semi-axis, |x1 - x2| / 2
    b: float  # vertical semi-axis, |y1 - y2| / 2

    @property
    def offset(self) -> Point2:
        return Point2(self.c2.x - self.c1.x, self.c2.y - self.c1.y)


@dataclass(frozen=True, slots=True)
class Challenge:
    """A sampled target angle; the circle itself is re-anchored every frame."""

    theta: float  # radians, in (pi, 2*pi)
    r_ratio: float = DEFAULT_R_RATIO  # circle radius as a fraction of a
    created_at_ms: int = 0


def validate_frame(frame: LandmarkFrame) -> None:
    """Raise InvalidFrameError unless the frame satisfies all invariants."""
    b = frame.bbox
    for name, v in (
        ("bbox.x_min", b.x_min),
        ("bbox.y_min", b.y_min),
        ("bbox.width", b.width),
        ("bbox.height", b.height),
        ("x1", frame.x1),
        ("x2", frame.x2),
        ("y1", frame.y1),
        ("y2", frame.y2),
        ("m.x", frame.m.x),
        ("m.y", frame.m.y),
    ):
        if not math.isfinite(v):
            raise InvalidFrameError(f"non-finite coordinate {name}={v!r}")
    if b.width <= 0 or b.height <= 0:
        raise InvalidFrameError(f"degenerate bbox {b.width}x{b.height}")
    if frame.x1 >= frame.x2:
        raise InvalidFrameError(f"x1={frame.x1} must be < x2={frame.x2}")
    if frame.y1 >= frame.y2:
        raise InvalidFrameError(f"y1={frame.y1} must be < y2={frame.y2}")
    if not isinstance(frame.t_ms, int) or isinstance(frame.t_ms, bool) or frame.t_ms < 0:
        raise InvalidFrameError(f"t_ms={frame.t_ms!r} must be a non-negative integer")


def frame_is_valid(frame: LandmarkFrame) -> bool:
    """Cheap boolean form of validate_frame (no exception, no message)."""
    b = frame.bbox
    s = (
        b.x_min + b.y_min + b.width + b.height
        + frame.x1 + frame.x2 + frame.y1 + frame.y2
        + frame.m.x + frame.m.y
    )
    # s - s == 0 iff no NaN/Inf crept in anywhere
    return (
        s - s == 0.0
        and b.width > 0.0
        and b.height > 0.0
        and frame.x1 < frame.x2
        and frame.y1 < frame.y2
        and frame.t_ms >= 0
    )


def compute_pose_state(frame: LandmarkFrame) -> PoseState:
    """Derive the pose-determining box center from one frame.

    c1 is the bbox center. With d_l = |x1 - m.x|, d_r = |x2 - m.x|,
    d_u = |y1 - m.y|, d_d = |y2 - m.y|, the dot sits at
    c2 = c1 + (d_l - d_r, d_u - d_d): a yaw to the right shortens d_r,
    pushing the dot right, and likewise for pitch.
    """
    validate_frame(frame)
    c1 = frame.bbox.center
    mx, my = frame.m.x, frame.m.y
    d_l = abs(frame.x1 - mx)
    d_r = abs(frame.x2 - mx)
    d_u = abs(frame.y1 - my)
    d_d = abs(frame.y2 - my)
    c2 = Point2(c1.x + (d_l - d_r), c1.y + (d_u - d_d))
    a = abs(frame.x1 - frame.x2) * 0.5
    b = abs(frame.y1 - frame.y2) * 0.5
    return PoseState(c1=c1, c2=c2, a=a, b=b)


def sample_theta(pose: PoseState, rng: Random) -> float:
    """Draw the target angle opposite the current horizontal head pose.

    Dot currently at or left of center (c1.x >= c2.x) -> theta uniform in
    (3*pi/2, 2*pi), which puts the circle on the right; otherwise uniform in
    (pi, 3*pi/2), circle on the left. Ties take the first branch.
    """
    if pose.c1.x >= pose.c2.x:
        return rng.uniform(THREE_HALF_PI, TWO_PI)
    return rng.uniform(math.pi, THREE_HALF_PI)


def target_circle(pose: PoseState, challenge: Challenge) -> tuple[Point2, float]:
    """Anchor the challenge circle on the current frame's half-ellipse.

    Center = (a*cos(theta) + c1.x, b*sin(theta) + c1.y); radius scales with
    the face so difficulty is resolution-independent.
    """
    center = Point2(
        pose.a * math.cos(challenge.theta) + pose.c1.x,
        pose.b * math.sin(challenge.theta) + pose.c1.y,
    )
    return center, challenge.r_ratio * pose.a


def hit_test(dot: Point2, circle_center: Point2, radius: float) -> bool:
    """True iff the dot is inside or on the circle (boundary counts)."""
    dx = dot.x - circle_center.x
    dy = dot.y - circle_center.y
    return dx * dx + dy * dy <= radius * radius


def nose_for_offset(
    x1: float, x2: float, y1: float, y2: float, offset_x: float, offset_y: float
) -> Point2:
    """Invert the pose arithmetic: nose position producing a desired offset.

    Exact as long as the nose stays between the face sides, i.e.
    |offset_x| <= x2 - x1 and |offset_y| <= y2 - y1 (ellipse targets always
    qualify since |offset| is at most one semi-axis).
    """
    return Point2(((x1 + x2) + offset_x) * 0.5, ((y1 + y2) + offset_y) * 0.5)
