from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .core import KinematicLimits, SafetyInputError, ZoneModel


@dataclass(frozen=True)
class SafetyParams:
    """Hyperparameters shared by the safety index, the scenario taxonomy and the baselines.

    ``rho`` shapes the per-human kernel, ``tau`` is the smooth-minimum
    temperature, ``d_min``/``d_max`` bound the unsafe and fully safe
    separations in meters.
    """

    rho: float = 1.0
    tau: float = 0.01
    d_min: float = 0.46
    d_max: float = 3.7
    limits: KinematicLimits = field(default_factory=KinematicLimits)
    zones: ZoneModel = field(default_factory=ZoneModel)

    def __post_init__(self) -> None:
        for name in ("rho", "tau", "d_min", "d_max"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise SafetyInputError(f"{name} must be finite, got {value!r}")
        if self.rho <= 0:
            raise SafetyInputError(f"rho must be > 0, got {self.rho}")
        if self.tau <= 0:
            raise SafetyInputError(f"tau must be > 0, got {self.tau}")
        if not 0 <= self.d_min < self.d_max:
            raise SafetyInputError(
                f"need 0 <= d_min < d_max, got d_min={self.d_min}, d_max={self.d_max}"
            )

    @property
    def a_max(self) -> float:
        return self.limits.a_max

    @property
    def v_max(self) -> float:
        return self.limits.v_max

    def stopping_distance(self, v: float) -> float:
        """Signed braking distance ``s(v) v^2 / (2 a_max)``; negative when receding."""
        return v * abs(v) / (2.0 * self.limits.a_max)

    def as_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("limits", "zones")}
        out["a_max"] = self.limits.a_max
        out["v_max"] = self.limits.v_max
        return out
