"""Landmark-frame trajectory files: JSON Lines, one frame per line.

Keys in fixed order: t_ms, bbox{x_min,y_min,width,height}, x1, x2, y1, y2,
m{x,y}. The same object shape rides inside wire "frame" messages, so any
recorded UI session can be re-run offline.
"""

from __future__ import annotations

import os
from typing import Iterable

from . import jsonio
from .geometry import BBox, LandmarkFrame, Point2


class TrajectoryError(ValueError):
    """Malformed trajectory content; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


def frame_to_obj(frame: LandmarkFrame) -> dict:
    return {
        "t_ms": frame.t_ms,
        "bbox": {
            "x_min": frame.bbox.x_min,
            "y_min": frame.bbox.y_min,
            "width": frame.bbox.width,
            "height": frame.bbox.height,
        },
        "x1": frame.x1,
        "x2": frame.x2,
        "y1": frame.y1,
        "y2": frame.y2,
        "m": {"x": frame.m.x, "y": frame.m.y},
    }


def dumps_frame(frame: LandmarkFrame) -> str:
    return jsonio.dumps(frame_to_obj(frame))


def _number(obj: dict, key: str, where: str) -> float:
    try:
        v = obj[key]
    except KeyError:
        raise TrajectoryError(f"missing key {where}{key!r}") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TrajectoryError(f"{where}{key!r} must be a number, got {v!r}")
    return float(v)


def frame_from_obj(obj: dict, *, t_ms: int | None = None) -> LandmarkFrame:
    """Build a LandmarkFrame from a decoded JSON object.

    t_ms overrides/supplies the timestamp (the gateway stamps wall-clock
    arrival onto frames that come without one).
    """
    if not isinstance(obj, dict):
        raise TrajectoryError(f"frame must be a JSON object, got {type(obj).__name__}")
    if t_ms is None:
        raw_t = obj.get("t_ms")
        if isinstance(raw_t, bool) or not isinstance(raw_t, int):
            raise TrajectoryError(f"'t_ms' must be an integer, got {raw_t!r}")
        t_ms = raw_t
    bbox_obj = obj.get("bbox")
    if not isinstance(bbox_obj, dict):
        raise TrajectoryError(f"'bbox' must be an object, got {bbox_obj!r}")
    m_obj = obj.get("m")
    if not isinstance(m_obj, dict):
        raise TrajectoryError(f"'m' must be an object, got {m_obj!r}")
    return LandmarkFrame(
        t_ms=t_ms,
        bbox=BBox(
            x_min=_number(bbox_obj, "x_min", "bbox."),
            y_min=_number(bbox_obj, "y_min", "bbox."),
            width=_number(bbox_obj, "width", "bbox."),
            height=_number(bbox_obj, "height", "bbox."),
        ),
        x1=_number(obj, "x1", ""),
        x2=_number(obj, "x2", ""),
        y1=_number(obj, "y1", ""),
        y2=_number(obj, "y2", ""),
        m=Point2(_number(m_obj, "x", "m."), _number(m_obj, "y", "m.")),
    )


def parse_frame_line(line: str, line_no: int | None = None) -> LandmarkFrame:
    try:
        obj = jsonio.loads(line)
    except ValueError as exc:
        raise TrajectoryError(f"invalid JSON: {exc}", line_no) from None
    try:
        return frame_from_obj(obj)
    except TrajectoryError as exc:
        if line_no is not None and exc.line_no is None:
            raise TrajectoryError(str(exc), line_no) from None
        raise


def read_trajectory(path: str | os.PathLike) -> list[LandmarkFrame]:
    """Read a JSONL trajectory; errors name the offending line."""
    frames = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            frames.append(parse_frame_line(line, line_no))
    return frames


def write_trajectory(path: str | os.PathLike, frames: Iterable[LandmarkFrame]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(dumps_frame(frame))
            fh.write("\n")
