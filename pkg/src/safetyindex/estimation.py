"""Relative distance/velocity estimation from per-keypoint detections.

The vision stack is not modelled: inputs are per-keypoint distances with
detector confidences, sampled at a fixed rate.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, NamedTuple, Sequence

from .core import RelativeState, SafetyInputError


class KeypointDetection(NamedTuple):
    keypoint_id: int
    rel_distance: float
    confidence: float


@dataclass(frozen=True)
class EstimatorConfig:
    confidence_threshold: float = 0.9
    sample_period: float = 1.0 / 30.0
    dropout_timeout: int = 5

    def __post_init__(self) -> None:
        if not 0 < self.confidence_threshold <= 1:
            raise SafetyInputError(
                f"confidence_threshold must be in (0, 1], got {self.confidence_threshold}"
            )
        if not self.sample_period > 0:
            raise SafetyInputError(f"sample_period must be > 0, got {self.sample_period}")
        if self.dropout_timeout < 1:
            raise SafetyInputError(f"dropout_timeout must be >= 1, got {self.dropout_timeout}")


def fuse_keypoints(
    detections: Iterable[KeypointDetection | Sequence[float]],
    cfg: EstimatorConfig | None = None,
) -> float | None:
    """Confidence-weighted mean distance of the keypoints above threshold.

    Returns ``None`` when nothing passes the threshold (a dropout).
    """
    cfg = cfg or EstimatorConfig()
    total_w = 0.0
    total_wd = 0.0
    for det in detections:
        _, d, conf = det
        if not (math.isfinite(d) and d >= 0):
            raise SafetyInputError(f"keypoint distance must be finite and >= 0, got {d}")
        if not 0 <= conf <= 1:
            raise SafetyInputError(f"keypoint confidence must be in [0, 1], got {conf}")
        if conf < cfg.confidence_threshold:
            continue
        total_w += conf
        total_wd += conf * d
    if total_w == 0.0:
        return None
    fused = total_wd / total_w
    return fused


class VelocityEstimate(NamedTuple):
    value: float
    degraded: bool


def _sign(x: float) -> float:
    return (x > 0) - (x < 0)


def estimate_velocity_checked(
    d_tm2: float, d_tm1: float, d_t: float, period: float
) -> VelocityEstimate:
    """Three-sample closing speed plus a flag for the first-difference fallback."""
    if not period > 0:
        raise SafetyInputError(f"sample period must be > 0, got {period}")
    # d2(t-2) - 2 d2(t-1) + d2(t), rearranged around d(t-1) to limit cancellation
    p = d_tm2 - d_tm1
    q = d_t - d_tm1
    radicand = 0.5 * (2.0 * d_tm1 * (p + q) + p * p + q * q)
    step = d_tm1 - d_t
    if radicand < 0:
        return VelocityEstimate(step / period, True)
    sign = _sign(step) or _sign(d_tm2 - d_t)
    return VelocityEstimate(sign * math.sqrt(radicand) / period, False)


def estimate_velocity(d_tm2: float, d_tm1: float, d_t: float, period: float) -> float:
    """Signed closing speed from three equally spaced distance samples.

    Positive when the distance is shrinking.
    """
    return estimate_velocity_checked(d_tm2, d_tm1, d_t, period).value


@dataclass
class HumanTrack:
    """Per-human estimator state: the last three contiguous fused distances."""

    human_id: Hashable
    history: deque = field(default_factory=lambda: deque(maxlen=3))
    last_seen: int | None = None
    last_frame: int | None = None
    latest_state: RelativeState | None = None

    def update(
        self,
        fused_distance: float | None,
        bearing: float,
        frame: int,
        cfg: EstimatorConfig | None = None,
    ) -> "HumanTrack":
        cfg = cfg or EstimatorConfig()
        if self.last_frame is not None and frame <= self.last_frame:
            raise SafetyInputError(
                f"track {self.human_id!r}: frame {frame} is not after {self.last_frame}"
            )
        self.last_frame = frame
        if fused_distance is None:
            self.latest_state = None
            if self.last_seen is None or frame - self.last_seen >= cfg.dropout_timeout:
                self.history.clear()
            return self
        if not (math.isfinite(fused_distance) and fused_distance >= 0):
            raise SafetyInputError(f"fused distance must be >= 0, got {fused_distance}")
        # velocities are never computed across a gap
        if self.history and self.history[-1][0] != frame - 1:
            self.history.clear()
        self.history.append((frame, fused_distance))
        self.last_seen = frame
        if len(self.history) < 3:
            self.latest_state = None
            return self
        (_, d0), (_, d1), (_, d2) = self.history
        est = estimate_velocity_checked(d0, d1, d2, cfg.sample_period)
        self.latest_state = RelativeState(d2, est.value, bearing, degraded=est.degraded)
        return self

    def is_stale(self, frame: int, cfg: EstimatorConfig | None = None) -> bool:
        cfg = cfg or EstimatorConfig()
        return self.last_seen is None or frame - self.last_seen >= cfg.dropout_timeout


def update_track(
    track: HumanTrack,
    fused_distance: float | None,
    bearing: float,
    frame: int,
    cfg: EstimatorConfig | None = None,
) -> HumanTrack:
    return track.update(fused_distance, bearing, frame, cfg)


class Tracker:
    """Keeps one HumanTrack per id and evicts tracks unseen for ``dropout_timeout`` frames."""

    def __init__(self, cfg: EstimatorConfig | None = None):
        self.cfg = cfg or EstimatorConfig()
        self.tracks: dict[Hashable, HumanTrack] = {}

    def step(
        self,
        frame: int,
        observations: Mapping[Hashable, tuple[Sequence[KeypointDetection], float]],
    ) -> list[HumanTrack]:
        """Feed one frame of ``{id: (keypoints, bearing)}`` and return the live tracks."""
        for hid, (keypoints, brg) in observations.items():
            track = self.tracks.get(hid)
            if track is None:
                track = self.tracks[hid] = HumanTrack(hid)
            track.update(fuse_keypoints(keypoints, self.cfg), brg, frame, self.cfg)
        for hid in list(self.tracks):
            if hid in observations:
                continue
            track = self.tracks[hid]
            track.update(None, 0.0, frame, self.cfg)
            if track.is_stale(frame, self.cfg):
                del self.tracks[hid]
        return list(self.tracks.values())
