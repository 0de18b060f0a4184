"""Stopping-zone scenario taxonomy (A-F) and scale appropriateness scoring.

A state is judged by where the robot would come to rest if it braked at
``a_max`` now: inside the intimate zone is Unsafe, beyond ``d_max`` is Safe,
anything in between is Between.  Within each assessment the letter is
picked by the direction of relative motion and, for the unsafe rows,
whether the human is still beyond ``d_max``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping, Sequence

from .core import RelativeState, SafetyInputError, Zone, classify_zone
from .params import SafetyParams

if TYPE_CHECKING:
    from .baselines import Scale

BOUNDARY_TOL = 1e-9


class Assessment(str, enum.Enum):
    SAFE = "Safe"
    BETWEEN = "Between"
    UNSAFE = "Unsafe"


SCENARIO_ASSESSMENT = {
    "A": Assessment.SAFE,
    "B": Assessment.SAFE,
    "C": Assessment.BETWEEN,
    "D": Assessment.BETWEEN,
    "E": Assessment.UNSAFE,
    "F": Assessment.UNSAFE,
}
SCENARIOS = tuple(SCENARIO_ASSESSMENT)


@dataclass(frozen=True)
class ScenarioLabel:
    id: str
    stopping_zone: Zone
    appropriate: Assessment
    stopping_point: float = math.nan
    on_boundary: bool = False

    def __str__(self) -> str:
        return self.id


def classify_scenario(d: float, v: float, p: SafetyParams | None = None) -> ScenarioLabel:
    """Scenario letter for a human at distance ``d`` closing at speed ``v``.

    States within ``BOUNDARY_TOL`` of the intimate threshold resolve to the
    unsafe rows and are flagged ``on_boundary``.
    """
    p = p or SafetyParams()
    if not (math.isfinite(d) and math.isfinite(v)) or d < 0:
        raise SafetyInputError(f"need finite d >= 0 and finite v, got d={d}, v={v}")
    d_stop = d - p.stopping_distance(v)
    approaching = v > 0
    on_boundary = (
        abs(d_stop - p.d_min) <= BOUNDARY_TOL or abs(d_stop - p.d_max) <= BOUNDARY_TOL
    )
    if d_stop <= p.d_min + BOUNDARY_TOL:
        letter = "E" if approaching and d >= p.d_max else "F"
        zone = Zone.INTIMATE
    elif d_stop >= p.d_max:
        letter = "B" if approaching else "A"
        zone = Zone.PUBLIC
    else:
        letter = "C" if approaching else "D"
        zone = max(classify_zone(d_stop, p.zones), Zone.PERSONAL)
        zone = min(zone, Zone.SOCIAL)
    return ScenarioLabel(letter, zone, SCENARIO_ASSESSMENT[letter], d_stop, on_boundary)


@dataclass(frozen=True)
class Bands:
    """Thresholds for reading a continuous [0, 1] safety value as Safe/Between/Unsafe."""

    unsafe: float = 0.05
    safe: float = 0.95

    def __post_init__(self) -> None:
        if not 0 <= self.unsafe < self.safe <= 1:
            raise SafetyInputError(f"need 0 <= unsafe < safe <= 1, got {self}")

    def assess(self, value: float) -> Assessment:
        if value >= self.safe:
            return Assessment.SAFE
        if value <= self.unsafe:
            return Assessment.UNSAFE
        return Assessment.BETWEEN


def score_scale(value: float, label: ScenarioLabel, bands: Bands | None = None) -> bool:
    """True when the scale's reading agrees with the scenario's appropriate assessment."""
    bands = bands or Bands()
    if not 0 <= value <= 1:
        raise SafetyInputError(f"scale output must lie in [0, 1], got {value}")
    return bands.assess(value) is label.appropriate


# (distance m, closing speed m/s) picked inside each row for the default parameters
REPRESENTATIVE_STATES: dict[str, tuple[float, float]] = {
    "A": (4.5, -0.5),
    "B": (6.0, 0.5),
    "C": (4.0, 1.6),
    "D": (2.75, 0.0),
    "E": (3.8, 1.9),
    "F": (0.25, 2.5),
}
BYSTANDER_STATE = (5.0, 0.0)


def representative_states(
    p: SafetyParams | None = None,
    states: Mapping[str, tuple[float, float]] | None = None,
) -> dict[str, RelativeState]:
    p = p or SafetyParams()
    states = states or REPRESENTATIVE_STATES
    out = {}
    for sid, (d, v) in states.items():
        got = classify_scenario(d, v, p).id
        if got != sid:
            raise SafetyInputError(
                f"representative state for {sid} (d={d}, v={v}) classifies as {got}"
            )
        out[sid] = RelativeState(d, v, 0.0)
    return out


@dataclass
class AppropriatenessMatrix:
    """Match table keyed by ``(scenario, scale, "SH" | "MH")``.

    ``None`` marks cells where a scale has no multi-human form.
    """

    scales: list[str]
    cells: dict[tuple[str, str, str], bool | None] = field(default_factory=dict)
    values: dict[tuple[str, str, str], float] = field(default_factory=dict)
    bands: Bands = field(default_factory=Bands)

    def mismatches(self, scale: str, mode: str) -> set[str]:
        return {s for s in SCENARIOS if self.cells.get((s, scale, mode)) is False}

    def column(self, scale: str, mode: str) -> dict[str, bool | None]:
        return {s: self.cells[(s, scale, mode)] for s in SCENARIOS}

    def rows(self) -> list[dict]:
        out = []
        for s in SCENARIOS:
            row = {"scenario": s, "appropriate": SCENARIO_ASSESSMENT[s].value}
            for name in self.scales:
                for mode in ("SH", "MH"):
                    cell = self.cells[(s, name, mode)]
                    row[f"{name}_{mode}"] = "N/A" if cell is None else ("match" if cell else "mismatch")
                    row[f"{name}_{mode}_value"] = self.values.get((s, name, mode), math.nan)
            out.append(row)
        return out

    def grid(self) -> str:
        def mark(cell):
            return "N/A" if cell is None else ("ok" if cell else "x")

        header = ["Scn", "Assess"] + [f"{n}:{m}" for n in self.scales for m in ("SH", "MH")]
        lines = [header]
        for s in SCENARIOS:
            lines.append(
                [s, SCENARIO_ASSESSMENT[s].value]
                + [mark(self.cells[(s, n, m)]) for n in self.scales for m in ("SH", "MH")]
            )
        widths = [max(len(r[i]) for r in lines) for i in range(len(header))]
        return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in lines)


def appropriateness_matrix(
    scales: Sequence["Scale"] | None = None,
    p: SafetyParams | None = None,
    bands: Bands | None = None,
    states: Mapping[str, tuple[float, float]] | None = None,
    bystander: tuple[float, float] = BYSTANDER_STATE,
    n_bystanders: int = 2,
) -> AppropriatenessMatrix:
    """Score every scale on one representative state per scenario.

    The multi-human variant adds ``n_bystanders`` humans in scenario A at
    zero bearing and scores the aggregated value.
    """
    from .baselines import default_scales

    p = p or SafetyParams()
    bands = bands or Bands()
    scales = list(scales) if scales is not None else default_scales()
    targets = representative_states(p, states)
    bys = RelativeState(*bystander, 0.0)
    if classify_scenario(bys.distance, bys.rel_velocity, p).id != "A":
        raise SafetyInputError(f"bystander state {bystander} is not in scenario A")
    matrix = AppropriatenessMatrix([s.name for s in scales], bands=bands)
    for sid, state in targets.items():
        label = classify_scenario(state.distance, state.rel_velocity, p)
        for scale in scales:
            sh = scale.evaluate([state], p)
            matrix.values[(sid, scale.name, "SH")] = sh
            matrix.cells[(sid, scale.name, "SH")] = score_scale(sh, label, bands)
            mh = scale.evaluate([state] + [bys] * n_bystanders, p)
            matrix.values[(sid, scale.name, "MH")] = mh
            matrix.cells[(sid, scale.name, "MH")] = (
                score_scale(mh, label, bands) if scale.multi_human else None
            )
    return matrix


# Reference pattern: scenarios where each scale is expected to misinform; DI has no multi-human column.
REFERENCE_MISMATCHES: dict[tuple[str, str], frozenset[str] | None] = {
    ("GSI", "SH"): frozenset(),
    ("GSI", "MH"): frozenset(),
    ("DI", "SH"): frozenset("CDEF"),
    ("DI", "MH"): None,
    ("KDF", "SH"): frozenset(),
    ("KDF", "MH"): frozenset("DEF"),
    ("HSF", "SH"): frozenset("CEF"),
    ("HSF", "MH"): frozenset("CEF"),
    ("HSA", "SH"): frozenset("E"),
    ("HSA", "MH"): frozenset("E"),
}


def deviations(matrix: AppropriatenessMatrix) -> list[tuple[str, str, str]]:
    """Cells ``(scenario, scale, mode)`` whose match/mismatch differs from the reference table."""
    out = []
    for (scale, mode), expected in REFERENCE_MISMATCHES.items():
        if scale not in matrix.scales or expected is None:
            continue
        for s in SCENARIOS:
            if (s not in expected) != matrix.cells[(s, scale, mode)]:
                out.append((s, scale, mode))
    return sorted(out)
