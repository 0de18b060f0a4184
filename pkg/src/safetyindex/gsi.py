"""Generalized safety index: per-human, directional, collective and vector forms.

The per-human index compares the distance left after an emergency stop
with the band ``[d_min, d_max]``::

    base = (d - (s(v) v^2 / (2 a_max) + d_min)) / (d_max - d_min)
    gsi_hat = max(base, 0) ** rho            (reported value capped at 1)

The directional index scales the complement by the bearing::

    gsi = 1 - (1 - gsi_hat) * clip(cos(theta), 0, 1)

and the collective index over ``N`` humans is the LogSumExp smooth minimum
``-tau * log(mean(exp(-gsi_i / tau)))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .core import (
    Pose2,
    RelativeState,
    SafetyInputError,
    Zone,
    bearing,
    classify_zone,
    distance,
)
from .estimation import HumanTrack
from .params import SafetyParams
from .scenario import ScenarioLabel, classify_scenario

DEFAULT_GRADIENT_STEP = 0.01


class NoHumansError(ValueError):
    """Raised when a collective value is requested over an empty set of humans."""


class GsiHat(NamedTuple):
    base: float  # linear, unclamped; negative means the intimate zone is (about to be) breached
    raw: float  # max(base, 0) ** rho, may exceed 1
    clamped: float  # raw capped at 1


def gsi_hat(d: float, v: float, p: SafetyParams | None = None) -> GsiHat:
    p = p or SafetyParams()
    if not (math.isfinite(d) and math.isfinite(v)):
        raise SafetyInputError(f"d and v must be finite, got d={d}, v={v}")
    if d < 0:
        raise SafetyInputError(f"distance must be >= 0, got {d}")
    base = (d - (p.stopping_distance(v) + p.d_min)) / (p.d_max - p.d_min)
    raw = max(base, 0.0) ** p.rho
    return GsiHat(base, raw, min(raw, 1.0))


def gsi_hat_array(d, v, p: SafetyParams | None = None) -> np.ndarray:
    """Vectorised clamped ``gsi_hat`` over broadcastable arrays."""
    p = p or SafetyParams()
    d = np.asarray(d, dtype=float)
    v = np.asarray(v, dtype=float)
    base = (d - (v * np.abs(v) / (2.0 * p.a_max) + p.d_min)) / (p.d_max - p.d_min)
    return np.minimum(np.maximum(base, 0.0) ** p.rho, 1.0)


def gsi_directional(gsi_hat_clamped: float, theta: float) -> float:
    """Bearing-scaled index; humans at or behind the robot's beam (|theta| >= pi/2) score 1."""
    if not 0.0 <= gsi_hat_clamped <= 1.0:
        raise SafetyInputError(f"gsi_hat must be in [0, 1], got {gsi_hat_clamped}")
    c = min(max(math.cos(theta), 0.0), 1.0)
    return 1.0 - (1.0 - gsi_hat_clamped) * c


def human_gsi(state: RelativeState, p: SafetyParams | None = None) -> float:
    return gsi_directional(gsi_hat(state.distance, state.rel_velocity, p).clamped, state.bearing)


def gsi_collective(values: Sequence[float], tau: float = 0.01) -> float:
    """Smooth minimum of the per-human indices, bracketed by ``[min, min + tau*ln N]``."""
    if not tau > 0:
        raise SafetyInputError(f"tau must be > 0, got {tau}")
    n = len(values)
    if n == 0:
        raise NoHumansError("no humans in range; collective index is not applicable")
    lo = min(values)
    if n == 1:
        return float(lo)
    s = math.fsum(math.exp(-(x - lo) / tau) for x in values)
    out = lo + tau * (math.log(n) - math.log(s))
    return float(min(max(out, lo), lo + tau * math.log(n)))


def gsi_multi_robot(collectives: Sequence[float], tau: float = 0.01) -> float:
    """Smooth minimum across per-robot collective indices."""
    return gsi_collective(collectives, tau)


def aggregate_states(states: Sequence[RelativeState], p: SafetyParams | None = None) -> float:
    p = p or SafetyParams()
    return gsi_collective([human_gsi(s, p) for s in states], p.tau)


# -- pose gradient -----------------------------------------------------------


class WorldHuman(NamedTuple):
    """Human at a world position with a fixed closing speed (m/s)."""

    x: float
    y: float
    rel_velocity: float = 0.0


def collective_at(robot: Pose2, humans: Sequence[WorldHuman], p: SafetyParams) -> float:
    values = []
    for h in humans:
        pos = (h.x, h.y)
        g = gsi_hat(distance(robot, pos), h.rel_velocity, p).clamped
        values.append(gsi_directional(g, bearing(robot, pos)))
    return gsi_collective(values, p.tau)


def _central_gradient(robot: Pose2, humans, p, h) -> np.ndarray:
    fx = collective_at(robot.moved(dx=h), humans, p) - collective_at(robot.moved(dx=-h), humans, p)
    fy = collective_at(robot.moved(dy=h), humans, p) - collective_at(robot.moved(dy=-h), humans, p)
    return np.array([fx, fy]) / (2.0 * h)


def _richardson(robot: Pose2, humans, p, h) -> tuple[np.ndarray, float]:
    coarse = _central_gradient(robot, humans, p, h)
    fine = _central_gradient(robot, humans, p, h / 2.0)
    # |fine - coarse| / 3 estimates the error left in the fine step
    return (4.0 * fine - coarse) / 3.0, float(np.hypot(*(fine - coarse))) / 3.0


def finite_difference_gradient(
    robot: Pose2, humans: Sequence[WorldHuman], p: SafetyParams, h: float = DEFAULT_GRADIENT_STEP
) -> np.ndarray:
    """Richardson-extrapolated central difference (steps ``h`` and ``h/2``), O(h^4)."""
    if not h > 0:
        raise SafetyInputError(f"step must be > 0, got {h}")
    return _richardson(robot, humans, p, h)[0]


def analytic_gradient(robot: Pose2, humans: Sequence[WorldHuman], p: SafetyParams) -> np.ndarray:
    """Chain-rule gradient of the collective index w.r.t. robot (x, y).

    Clamped regions (base <= 0, raw >= 1, |bearing| >= pi/2) contribute zero.
    """
    if not humans:
        raise NoHumansError("no humans in range; gradient is not applicable")
    values, grads = [], []
    span = p.d_max - p.d_min
    for h in humans:
        pos = (h.x, h.y)
        d = distance(robot, pos)
        th = bearing(robot, pos)
        gh = gsi_hat(d, h.rel_velocity, p)
        c = math.cos(th)
        values.append(gsi_directional(gh.clamped, th))
        if c <= 0.0:
            grads.append(np.zeros(2))
            continue
        if gh.base <= 0.0 or gh.raw >= 1.0:
            dg_dd = 0.0
        else:
            dg_dd = p.rho * gh.base ** (p.rho - 1.0) / span
        dx, dy = h.x - robot.x, h.y - robot.y
        grad_d = np.array([-dx, -dy]) / d
        grad_th = np.array([dy, -dx]) / (d * d)
        # g = 1 - (1 - gh) cos th
        grads.append(c * dg_dd * grad_d + (1.0 - gh.clamped) * math.sin(th) * grad_th)
    vals = np.asarray(values)
    w = np.exp(-(vals - vals.min()) / p.tau)
    w /= w.sum()
    return (w[:, None] * np.asarray(grads)).sum(axis=0)


@dataclass(frozen=True)
class GsiVector:
    vector: np.ndarray  # collective * unit gradient, zero when flat
    value: float  # collective index at the pose
    gradient: np.ndarray  # raw pose gradient
    flat: bool
    step: float = DEFAULT_GRADIENT_STEP  # finite-difference step actually used


def gsi_gradient(
    robot: Pose2,
    humans: Sequence[WorldHuman],
    p: SafetyParams | None = None,
    h: float = DEFAULT_GRADIENT_STEP,
    flat_tol: float = 1e-12,
    rel_tol: float = 1e-6,
    min_step: float = 1e-5,
) -> GsiVector:
    """Collective index as a vector pointing along steepest safety increase.

    The step starts at ``h`` and is cut tenfold while the two-step
    consistency estimate exceeds ``rel_tol`` of the gradient norm.  Near ties
    between humans the smooth minimum bends over a few ``tau`` of index
    value, which can be finer than a centimetre of robot motion.
    """
    p = p or SafetyParams()
    if not humans:
        raise NoHumansError("no humans in range; gradient is not applicable")
    if not h > 0:
        raise SafetyInputError(f"step must be > 0, got {h}")
    value = collective_at(robot, humans, p)
    step = h
    grad, err = _richardson(robot, humans, p, step)
    while err > rel_tol * float(np.hypot(*grad)) and step / 10.0 >= min_step:
        step /= 10.0
        grad, err = _richardson(robot, humans, p, step)
    norm = float(np.hypot(*grad))
    if norm <= flat_tol:
        return GsiVector(np.zeros(2), value, grad, True, step)
    return GsiVector(value * grad / norm, value, grad, False, step)


# -- frame evaluation --------------------------------------------------------


@dataclass(frozen=True)
class HumanSafety:
    state: RelativeState
    gsi_hat: float
    gsi_directional: float
    scenario: ScenarioLabel
    zone: Zone


@dataclass
class SafetyFrame:
    timestamp: float
    per_human: dict[Hashable, HumanSafety] = field(default_factory=dict)
    collective_gsi: float | None = None
    gsi_vector: GsiVector | None = None

    @property
    def no_humans(self) -> bool:
        return not self.per_human

    @property
    def directional_values(self) -> list[float]:
        return [h.gsi_directional for h in self.per_human.values()]


def _valid_states(tracks) -> dict[Hashable, RelativeState]:
    if isinstance(tracks, Mapping):
        return {k: s for k, s in tracks.items() if s is not None}
    out = {}
    for t in tracks:
        if isinstance(t, HumanTrack):
            if t.latest_state is not None:
                out[t.human_id] = t.latest_state
        else:
            hid, state = t
            if state is not None:
                out[hid] = state
    return out


def evaluate_frame(
    robot: Pose2,
    tracks: Iterable[HumanTrack] | Mapping[Hashable, RelativeState | None],
    p: SafetyParams | None = None,
    timestamp: float = 0.0,
    with_gradient: bool = False,
    h: float = DEFAULT_GRADIENT_STEP,
) -> SafetyFrame:
    """Score every human that currently has a valid relative state.

    Tracks without a state (warm-up, dropout) are skipped.  With no valid
    humans the frame's ``collective_gsi`` stays ``None``.
    """
    p = p or SafetyParams()
    states = _valid_states(tracks)
    frame = SafetyFrame(timestamp)
    if not states:
        return frame
    values = []
    for hid, st in states.items():
        g = gsi_hat(st.distance, st.rel_velocity, p).clamped
        gd = gsi_directional(g, st.bearing)
        values.append(gd)
        frame.per_human[hid] = HumanSafety(
            st, g, gd, classify_scenario(st.distance, st.rel_velocity, p),
            classify_zone(st.distance, p.zones),
        )
    frame.collective_gsi = gsi_collective(values, p.tau)
    if with_gradient:
        humans = [
            WorldHuman(
                robot.x + st.distance * math.cos(robot.theta + st.bearing),
                robot.y + st.distance * math.sin(robot.theta + st.bearing),
                st.rel_velocity,
            )
            for st in states.values()
            if st.distance > 0
        ]
        if humans:
            frame.gsi_vector = gsi_gradient(robot, humans, p, h)
    return frame
