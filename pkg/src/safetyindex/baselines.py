"""Comparison safety scales DI, KDF, HSF and HSA, reported as safety in [0, 1].

These are compact reconstructions of four established scales, tuned so that
their qualitative behaviour (what each one sees and what it misses) is
reproduced.  Danger-type scales (DI, KDF) are inverted so that 1 means safe.
Multi-human values are plain means over humans.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .core import RelativeState, SafetyInputError
from .gsi import NoHumansError, gsi_collective, human_gsi
from .params import SafetyParams


@dataclass(frozen=True)
class BaselineConfig:
    """Shared parameters plus per-scale kernel constants.

    ``kdf_midpoint``/``kdf_width`` place the logistic that maps the kinetostatic
    field (1/m) to safety; ``hsa_velocity_gain`` (s^2/m^2) and ``hsa_floor``
    shape the velocity factor of HSA.
    """

    params: SafetyParams = field(default_factory=SafetyParams)
    kdf_gain: float = 1.0
    kdf_midpoint: float = 0.42
    kdf_width: float = 0.025
    hsa_velocity_gain: float = 0.08
    hsa_floor: float = 0.1

    def __post_init__(self) -> None:
        if self.kdf_gain <= 0 or self.kdf_width <= 0 or self.kdf_midpoint <= 0:
            raise SafetyInputError("KDF constants must be positive")
        if self.hsa_velocity_gain < 0 or not 0 < self.hsa_floor < 1:
            raise SafetyInputError("need hsa_velocity_gain >= 0 and 0 < hsa_floor < 1")


def _clip01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def _check_distance(d: float) -> None:
    if not (math.isfinite(d) and d >= 0):
        raise SafetyInputError(f"distance must be finite and >= 0, got {d}")


def di(d: float, v: float, cfg: BaselineConfig | None = None) -> float:
    """Danger Index as safety: ``1 - f_d(d) * f_v(v)``.

    The product form is blind to a stationary robot at any range.
    """
    cfg = cfg or BaselineConfig()
    p = cfg.params
    _check_distance(d)
    f_d = _clip01((p.d_max - d) / (p.d_max - p.d_min))
    f_v = _clip01(v / p.v_max)
    return 1.0 - f_d * f_v


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def kdf_field(d: float, v: float, theta: float, cfg: BaselineConfig | None = None) -> float:
    cfg = cfg or BaselineConfig()
    if not math.isfinite(d) or d < 0:
        raise SafetyInputError(f"distance must be finite and >= 0, got {d}")
    if d == 0:
        raise SafetyInputError("kinetostatic danger field is singular at d = 0")
    v_max = cfg.params.v_max
    speed = min(max(v, 0.0), v_max) / v_max
    return cfg.kdf_gain / d * (1.0 + speed * max(math.cos(theta), 0.0))


def kdf(d: float, v: float, theta: float = 0.0, cfg: BaselineConfig | None = None) -> float:
    """Inverted kinetostatic danger field, normalised so a zero field reads 1."""
    cfg = cfg or BaselineConfig()
    f = kdf_field(d, v, theta, cfg)
    m, w = cfg.kdf_midpoint, cfg.kdf_width
    return _logistic((m - f) / w) / _logistic(m / w)


def hsf(d: float, cfg: BaselineConfig | None = None) -> float:
    """Distance-only human safety field scaled by 1/d_max."""
    cfg = cfg or BaselineConfig()
    _check_distance(d)
    return min(d / cfg.params.d_max, 1.0)


def hsa(d: float, v: float, cfg: BaselineConfig | None = None) -> float:
    cfg = cfg or BaselineConfig()
    _check_distance(d)
    delta_d = min(d / cfg.params.d_max, 1.0)
    closing = max(v, 0.0)
    delta_v = max(math.exp(-cfg.hsa_velocity_gain * closing * closing), cfg.hsa_floor)
    return delta_d * delta_v


def aggregate_mean(values: Sequence[float]) -> float:
    if len(values) == 0:
        raise NoHumansError("no humans in range; mean is not applicable")
    return math.fsum(values) / len(values)


@dataclass(frozen=True)
class Scale:
    """A per-human safety scale plus the rule that aggregates it over humans."""

    name: str
    per_human: Callable[[RelativeState, SafetyParams], float]
    aggregate: Callable[[Sequence[float], SafetyParams], float]
    multi_human: bool = True

    def evaluate(self, states: Sequence[RelativeState], p: SafetyParams | None = None) -> float:
        p = p or SafetyParams()
        return self.aggregate([self.per_human(s, p) for s in states], p)


def _mean(values, p):
    return aggregate_mean(values)


def make_scales(cfg: BaselineConfig | None = None) -> dict[str, Scale]:
    """Registry of all scales keyed by id.  Baselines take shared parameters from ``p``."""
    cfg = cfg or BaselineConfig()

    def with_params(p: SafetyParams) -> BaselineConfig:
        return cfg if p == cfg.params else replace(cfg, params=p)

    return {
        "GSI": Scale("GSI", human_gsi, lambda vals, p: gsi_collective(vals, p.tau)),
        "DI": Scale(
            "DI", lambda s, p: di(s.distance, s.rel_velocity, with_params(p)), _mean,
            multi_human=False,
        ),
        "KDF": Scale(
            "KDF", lambda s, p: kdf(s.distance, s.rel_velocity, s.bearing, with_params(p)), _mean
        ),
        "HSF": Scale("HSF", lambda s, p: hsf(s.distance, with_params(p)), _mean),
        "HSA": Scale("HSA", lambda s, p: hsa(s.distance, s.rel_velocity, with_params(p)), _mean),
    }


SCALE_IDS = ("GSI", "DI", "KDF", "HSF", "HSA")


def get_scales(names: Sequence[str] | None = None, cfg: BaselineConfig | None = None) -> list[Scale]:
    registry = make_scales(cfg)
    names = list(names) if names else list(SCALE_IDS)
    unknown = [n for n in names if n.upper() not in registry]
    if unknown:
        raise SafetyInputError(f"unknown scale(s) {unknown}; choose from {list(SCALE_IDS)}")
    return [registry[n.upper()] for n in names]


def default_scales() -> list[Scale]:
    return get_scales()
