"""Planar geometry, agent state types and the proxemic zone model.

All angles are radians, counterclockwise from the positive x-axis.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


class SafetyInputError(ValueError):
    """Raised when an input violates a documented precondition."""


class DegenerateGeometryError(SafetyInputError):
    """Raised when a bearing is requested for coincident robot/human positions."""


def normalize_angle(angle: float) -> float:
    """Wrap ``angle`` to the half-open interval (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise SafetyInputError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class Pose2:
    """Planar pose. ``theta`` is wrapped to (-pi, pi] on construction."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        _require_finite(x=self.x, y=self.y, theta=self.theta)
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def moved(self, dx: float = 0.0, dy: float = 0.0, dtheta: float = 0.0) -> "Pose2":
        return Pose2(self.x + dx, self.y + dy, self.theta + dtheta)


@dataclass(frozen=True)
class KinematicLimits:
    """Robot speed limit (m/s) and maximum deceleration (m/s^2)."""

    v_max: float = 2.0
    a_max: float = 0.5

    def __post_init__(self) -> None:
        _require_finite(v_max=self.v_max, a_max=self.a_max)
        if self.v_max <= 0:
            raise SafetyInputError(f"v_max must be > 0, got {self.v_max}")
        if self.a_max <= 0:
            raise SafetyInputError(f"a_max must be > 0, got {self.a_max}")


class Zone(enum.IntEnum):
    """Proxemic zones, ordered from most to least intimate."""

    INTIMATE = 0
    PERSONAL = 1
    SOCIAL = 2
    PUBLIC = 3

    @property
    def label(self) -> str:
        return self.name.capitalize()


@dataclass(frozen=True)
class ZoneModel:
    intimate_radius: float = 0.46
    personal_radius: float = 1.2
    social_radius: float = 3.7

    def __post_init__(self) -> None:
        if not 0 < self.intimate_radius < self.personal_radius < self.social_radius:
            raise SafetyInputError(
                "zone radii must satisfy 0 < intimate < personal < social, got "
                f"{self.intimate_radius}, {self.personal_radius}, {self.social_radius}"
            )


@dataclass(frozen=True)
class RelativeState:
    """Distance (m), closing speed (m/s, positive = approaching) and bearing (rad)."""

    distance: float
    rel_velocity: float
    bearing: float = 0.0
    degraded: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        _require_finite(
            distance=self.distance, rel_velocity=self.rel_velocity, bearing=self.bearing
        )
        if self.distance < 0:
            raise SafetyInputError(f"distance must be >= 0, got {self.distance}")
        object.__setattr__(self, "bearing", normalize_angle(self.bearing))


def distance(robot: Pose2, human: tuple[float, float]) -> float:
    hx, hy = human
    _require_finite(hx=hx, hy=hy)
    return math.hypot(hx - robot.x, hy - robot.y)


def bearing(robot: Pose2, human: tuple[float, float]) -> float:
    """Angle of the robot->human segment relative to the robot heading."""
    hx, hy = human
    _require_finite(hx=hx, hy=hy)
    dx, dy = hx - robot.x, hy - robot.y
    if dx == 0.0 and dy == 0.0:
        raise DegenerateGeometryError(
            f"human at {human} coincides with robot position {robot.position}"
        )
    return normalize_angle(math.atan2(dy, dx) - robot.theta)


def relative_state(
    robot: Pose2, human: tuple[float, float], rel_velocity: float = 0.0
) -> RelativeState:
    return RelativeState(distance(robot, human), rel_velocity, bearing(robot, human))


def classify_zone(d: float, zones: ZoneModel | None = None) -> Zone:
    """Zone containing distance ``d``; a boundary belongs to the inner zone."""
    zones = zones or ZoneModel()
    if not d >= 0:
        raise SafetyInputError(f"distance must be >= 0, got {d}")
    if d <= zones.intimate_radius:
        return Zone.INTIMATE
    if d <= zones.personal_radius:
        return Zone.PERSONAL
    if d <= zones.social_radius:
        return Zone.SOCIAL
    return Zone.PUBLIC
