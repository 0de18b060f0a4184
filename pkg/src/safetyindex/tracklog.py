"""Line-delimited replay format.

One JSON object per line.  The first line is the header::

    {"record": "header", "format": "safetyindex-tracklog", "version": 1,
     "sample_rate": 30.0, "humans": ["h1", ...], "seed": 7,
     "keypoints": true, ...}

``keypoints: false`` declares a ground-truth-only log; readers then score
the recorded states directly.

Every following line is one frame::

    {"record": "frame", "frame": 0, "t": 0.0,
     "robot": {"x": 0.0, "y": 0.0, "theta_deg": 0.0},
     "humans": {"h1": {"bearing_deg": 35.0,
                       "keypoints": [[0, 5.01, 0.97], ...] | null,
                       "truth": {"x": .., "y": .., "distance": ..,
                                 "rel_velocity": .., "bearing_deg": ..} | null,
                       "scenario": "A" | null}}}

Angles are degrees on disk and radians in memory.  Floats are written with
``repr`` precision so a read/write cycle is lossless.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Hashable, Iterator

from .core import Pose2, RelativeState
from .estimation import KeypointDetection

FORMAT_NAME = "safetyindex-tracklog"
FORMAT_VERSION = 1


class TrackLogError(ValueError):
    """Malformed TrackLog content; ``frame`` is the offending frame index when known."""

    def __init__(self, message: str, frame: int | None = None, line: int | None = None):
        where = []
        if frame is not None:
            where.append(f"frame {frame}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.frame = frame
        self.line = line


@dataclass
class HumanObservation:
    bearing: float
    keypoints: list[KeypointDetection] | None = None
    truth: RelativeState | None = None
    position: tuple[float, float] | None = None
    scenario: str | None = None


@dataclass
class LogFrame:
    frame: int
    timestamp: float
    robot: Pose2
    humans: dict[Hashable, HumanObservation] = field(default_factory=dict)


@dataclass
class TrackLog:
    header: dict
    frames: list[LogFrame] = field(default_factory=list)

    @property
    def sample_rate(self) -> float:
        return float(self.header["sample_rate"])

    @property
    def has_keypoints(self) -> bool:
        return any(
            obs.keypoints is not None for fr in self.frames for obs in fr.humans.values()
        )

    @property
    def has_truth(self) -> bool:
        return any(obs.truth is not None for fr in self.frames for obs in fr.humans.values())

    def write(self, fp: IO[str]) -> None:
        fp.write(_dumps(self.header) + "\n")
        for fr in self.frames:
            fp.write(_dumps(frame_to_record(fr)) + "\n")

    def dumps(self) -> str:
        buf = io.StringIO()
        self.write(buf)
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fp:
            self.write(fp)


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def frame_to_record(fr: LogFrame) -> dict:
    humans = {}
    for hid, obs in fr.humans.items():
        rec = {
            "bearing_deg": math.degrees(obs.bearing),
            "keypoints": None
            if obs.keypoints is None
            else [[k.keypoint_id, k.rel_distance, k.confidence] for k in obs.keypoints],
            "truth": None,
            "scenario": obs.scenario,
        }
        if obs.truth is not None:
            x, y = obs.position if obs.position is not None else (None, None)
            rec["truth"] = {
                "x": x,
                "y": y,
                "distance": obs.truth.distance,
                "rel_velocity": obs.truth.rel_velocity,
                "bearing_deg": math.degrees(obs.truth.bearing),
            }
        humans[str(hid)] = rec
    return {
        "record": "frame",
        "frame": fr.frame,
        "t": fr.timestamp,
        "robot": {"x": fr.robot.x, "y": fr.robot.y, "theta_deg": math.degrees(fr.robot.theta)},
        "humans": humans,
    }


def record_to_frame(rec: dict, line: int | None = None) -> LogFrame:
    idx = rec.get("frame") if isinstance(rec, dict) else None
    try:
        if rec.get("record") != "frame":
            raise TrackLogError(f"expected a frame record, got {rec.get('record')!r}", idx, line)
        idx = int(rec["frame"])
        r = rec["robot"]
        robot = Pose2(float(r["x"]), float(r["y"]), math.radians(float(r["theta_deg"])))
        humans = {}
        for hid, h in rec["humans"].items():
            kps = h.get("keypoints")
            keypoints = (
                None
                if kps is None
                else [KeypointDetection(int(k), float(d), float(c)) for k, d, c in kps]
            )
            truth = position = None
            t = h.get("truth")
            if t is not None:
                truth = RelativeState(
                    float(t["distance"]),
                    float(t["rel_velocity"]),
                    math.radians(float(t["bearing_deg"])),
                )
                if t.get("x") is not None:
                    position = (float(t["x"]), float(t["y"]))
            humans[hid] = HumanObservation(
                math.radians(float(h["bearing_deg"])), keypoints, truth, position, h.get("scenario")
            )
        return LogFrame(idx, float(rec["t"]), robot, humans)
    except TrackLogError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise TrackLogError(f"malformed frame record: {exc!r}", idx, line) from exc


def _parse_line(text: str, line: int) -> dict:
    try:
        rec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TrackLogError(f"invalid JSON: {exc.msg}", None, line) from exc
    if not isinstance(rec, dict):
        raise TrackLogError("record is not an object", None, line)
    return rec


def iter_records(fp: IO[str]) -> Iterator[tuple[dict, LogFrame | None]]:
    """Yield ``(header, frame)`` pairs; the first item carries ``frame=None``."""
    header = None
    expected = None
    for n, text in enumerate(fp, start=1):
        if not text.strip():
            continue
        rec = _parse_line(text, n)
        if header is None:
            if rec.get("record") != "header" or rec.get("format") != FORMAT_NAME:
                raise TrackLogError("first line must be a tracklog header", None, n)
            if not (isinstance(rec.get("sample_rate"), (int, float)) and rec["sample_rate"] > 0):
                raise TrackLogError("header sample_rate must be > 0", None, n)
            header = rec
            yield header, None
            continue
        fr = record_to_frame(rec, n)
        if expected is not None and fr.frame != expected:
            raise TrackLogError(f"frames not contiguous: expected {expected}", fr.frame, n)
        expected = fr.frame + 1
        yield header, fr
    if header is None:
        raise TrackLogError("empty tracklog: missing header")


def read(fp: IO[str]) -> TrackLog:
    log = None
    for header, fr in iter_records(fp):
        if fr is None:
            log = TrackLog(header)
        else:
            log.frames.append(fr)
    return log


def loads(text: str) -> TrackLog:
    return read(io.StringIO(text))


def load(path: str | Path) -> TrackLog:
    with open(path, encoding="utf-8") as fp:
        return read(fp)
