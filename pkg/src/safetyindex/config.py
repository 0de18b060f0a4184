"""Run configuration: flat ``key = value`` files plus command-line overrides.

Example file::

    # safety index
    rho = 1.0
    tau = 0.01
    d_min = 0.46
    d_max = 3.7
    a_max = 0.5
    v_max = 2.0
    noise_preset = task-robot
    scales = GSI, KDF, HSF, HSA

Blank lines and ``#`` comments are ignored.  Unknown keys are rejected.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .baselines import SCALE_IDS
from .core import KinematicLimits, SafetyInputError
from .estimation import EstimatorConfig
from .params import SafetyParams
from .scenario import Bands
from .sim import DEFAULT_RATE, NOISE_PRESETS


class ConfigError(SafetyInputError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config field {key!r}: {message}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    rho: float = 1.0
    tau: float = 0.01
    d_min: float = 0.46
    d_max: float = 3.7
    a_max: float = 0.5
    v_max: float = 2.0
    confidence_threshold: float = 0.9
    dropout_timeout: int = 5
    rate: float = DEFAULT_RATE
    noise_preset: str = "none"
    scales: tuple[str, ...] = SCALE_IDS
    seed: int = 0
    unsafe_band: float = 0.05
    safe_band: float = 0.95
    format: str = "csv"
    use_truth: bool = False
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        self.safety_params()
        self.estimator_config()
        self.bands()
        if self.noise_preset not in NOISE_PRESETS:
            raise ConfigError("noise_preset", f"must be one of {list(NOISE_PRESETS)}")
        bad = [s for s in self.scales if s not in SCALE_IDS]
        if bad or not self.scales:
            raise ConfigError("scales", f"unknown or empty scale list {list(self.scales)}")
        if self.format not in ("csv", "jsonl"):
            raise ConfigError("format", "must be csv or jsonl")
        if not self.rate > 0:
            raise ConfigError("rate", "must be > 0")

    def safety_params(self) -> SafetyParams:
        try:
            limits = KinematicLimits(v_max=self.v_max, a_max=self.a_max)
        except SafetyInputError as exc:
            raise ConfigError("a_max" if "a_max" in str(exc) else "v_max", str(exc)) from None
        try:
            return SafetyParams(self.rho, self.tau, self.d_min, self.d_max, limits)
        except SafetyInputError as exc:
            key = next((k for k in ("rho", "tau", "d_min", "d_max") if k in str(exc)), "params")
            raise ConfigError(key, str(exc)) from None

    def estimator_config(self) -> EstimatorConfig:
        try:
            return EstimatorConfig(self.confidence_threshold, 1.0 / self.rate, self.dropout_timeout)
        except (SafetyInputError, ZeroDivisionError) as exc:
            key = "confidence_threshold" if "confidence" in str(exc) else "dropout_timeout"
            raise ConfigError(key, str(exc)) from None

    def bands(self) -> Bands:
        try:
            return Bands(self.unsafe_band, self.safe_band)
        except SafetyInputError as exc:
            raise ConfigError("unsafe_band", str(exc)) from None

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "extra"}
        out["scales"] = list(self.scales)
        return out

    def replace(self, **overrides: Any) -> "RunConfig":
        return from_mapping({**self.as_dict(), **{k: v for k, v in overrides.items() if v is not None}})


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig) if f.name != "extra"}


def _coerce(key: str, value: Any) -> Any:
    kind = _FIELDS[key].type
    try:
        if kind == "float":
            return float(value)
        if kind == "int":
            return int(value)
        if kind == "bool":
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if kind.startswith("tuple"):
            if isinstance(value, str):
                value = [v for v in (x.strip() for x in value.split(",")) if v]
            return tuple(str(v).upper() for v in value)
        return str(value).strip()
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot parse {value!r} as {kind}") from None


def from_mapping(values: Mapping[str, Any]) -> RunConfig:
    unknown = sorted(set(values) - set(_FIELDS))
    if unknown:
        raise ConfigError(unknown[0], f"unknown key; valid keys are {sorted(_FIELDS)}")
    return RunConfig(**{k: _coerce(k, v) for k, v in values.items()})


def parse_config(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(key, f"duplicate key on line {n}")
        values[key] = value
    return values


def load_config(path: str | Path | None = None, **overrides: Any) -> RunConfig:
    values: dict[str, Any] = {}
    if path is not None:
        values.update(parse_config(Path(path).read_text(encoding="utf-8")))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return from_mapping(values)
