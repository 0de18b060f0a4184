"""Acceptance gate, one check per criterion.

Run under pytest (a PASS/FAIL line per criterion is printed in the terminal
summary) or directly with ``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from safetyindex import Pose2, bearing, distance, gsi_directional, RelativeState, SafetyParams, evaluate_frame, gsi_collective, gsi_hat
from safetyindex.estimation import estimate_velocity
from safetyindex.gsi import WorldHuman, collective_at, finite_difference_gradient, gsi_gradient
from safetyindex.scenario import appropriateness_matrix, deviations
from safetyindex.sim import EXPERIMENTS, generate, fuse_only_mape, passing_script, replay, scripted_experiment

RESULTS: dict[int, tuple[bool, str]] = {}

# Cells the reconstructed baselines cannot reproduce; see README "Known deviations".
KNOWN_DEVIATIONS = {("F", "DI", "SH"), ("F", "HSA", "MH")}


def _record(n: int, ok: bool, detail: str) -> tuple[bool, str]:
    RESULTS[n] = (ok, detail)
    return ok, detail


def criterion_1():
    p1 = SafetyParams(limits=_limits(a_max=1.0))
    cases = [
        (gsi_hat(5.0, 0.0).clamped, 1.0),
        (gsi_hat(0.3, 0.0).clamped, 0.0),
        (gsi_hat(2.08, 1.0, p1).clamped, 28 / 81),  # (2.08 - 0.5 - 0.46) / 3.24
        (gsi_hat(2.0, -1.0, p1).clamped, 51 / 81),  # (2.0 + 0.5 - 0.46) / 3.24
    ]
    worst = max(abs(got - want) for got, want in cases)
    t0 = time.perf_counter()
    for _ in range(1000):
        gsi_hat(2.08, 1.0, p1)
    per_call = (time.perf_counter() - t0) / 1000
    ok = worst <= 1e-9 and per_call < 1e-3
    return _record(1, ok, f"max err {worst:.2e}, {per_call * 1e6:.1f} us/call")


def _limits(**kw):
    from safetyindex import KinematicLimits

    return KinematicLimits(**kw)


def criterion_2():
    got = gsi_collective([0.7, 0.9, 0.4], 0.01)
    want = 0.4 + 0.01 * math.log(3) - 0.01 * math.log1p(math.exp(-30) + math.exp(-50))
    ok = abs(got - 0.410986) <= 1e-4 and abs(got - want) <= 1e-12
    return _record(2, ok, f"collective {got:.9f}")


def criterion_3():
    t0 = time.perf_counter()
    m = appropriateness_matrix()
    elapsed = time.perf_counter() - t0
    devs = set(deviations(m))
    gsi_cells = [m.cells[(s, "GSI", mode)] for s in "ABCDEF" for mode in ("SH", "MH")]
    pattern = (
        m.mismatches("HSF", "SH") == set("CEF")
        and m.mismatches("HSF", "MH") == set("CEF")
        and m.mismatches("HSA", "SH") == {"E"}
        and m.mismatches("DI", "SH") >= set("CDE")
        and m.mismatches("KDF", "MH") == set("DEF")
    )
    ok = (
        all(gsi_cells)
        and len(gsi_cells) == 12
        and not any(d[1] == "GSI" for d in devs)
        and devs <= KNOWN_DEVIATIONS
        and pattern
        and elapsed < 1.0
    )
    listed = ", ".join("/".join(d) for d in sorted(devs)) or "none"
    return _record(3, ok, f"GSI 12/12, known deviations: {listed}, {elapsed * 1e3:.0f} ms")


def criterion_4(n: int = 10_000):
    rng = np.random.default_rng(4)
    bad = 0
    for _ in range(n):
        k = int(rng.integers(1, 12))
        vals = rng.uniform(0, 1, k)
        if rng.random() < 0.2:
            vals[: k // 2] = vals[0]  # ties
        tau = float(10 ** rng.uniform(-3, 1))
        c = gsi_collective(list(vals), tau)
        lo, mean = float(vals.min()), float(vals.mean())
        tol = 1e-12
        if not (lo - tol <= c <= mean + tol and abs(c - lo) <= tau * math.log(k) + tol):
            bad += 1
    return _record(4, bad == 0, f"{n} lists, {bad} violations")


def criterion_5():
    from safetyindex.gsi import gsi_hat_array
    from dataclasses import replace

    p = SafetyParams()
    d, v = np.meshgrid(np.linspace(0.0, 8.0, 401), np.linspace(-2.0, 2.0, 201))
    g = {r: gsi_hat_array(d, v, replace(p, rho=r)) for r in (0.5, 1.0, 2.0)}
    weak = int(np.sum(g[2.0] > g[1.0]) + np.sum(g[1.0] > g[0.5]))
    # grid points where base is exactly 0 or 1 in exact arithmetic round to
    # within an ulp of it, so "interior" keeps a 1e-12 margin
    interior = (g[1.0] > 1e-12) & (g[1.0] < 1 - 1e-12)
    strict = int(np.sum(~((g[2.0] < g[1.0]) & (g[1.0] < g[0.5]))[interior]))
    return _record(5, weak + strict == 0, f"{d.size} grid points, {weak + strict} violations")


def criterion_6(n: int = 1000):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(n):
        period = float(rng.choice([1 / 30, 1 / 15, 0.1, 0.5, 1.0]))
        # distances on a 2**-20 m grid so the three samples are exactly linear;
        # float rounding of off-grid samples is a property of the inputs, not the estimator
        step = round(float(rng.uniform(-2.0, 2.0)) * period * 2**20) / 2**20
        d_t = int(rng.integers(2**18, 8 * 2**20)) / 2**20
        d_t = max(d_t, -2 * step + 0.1)
        v = step / period
        if v == 0 or abs(v) > 2.0:
            continue
        samples = (d_t + 2 * step, d_t + step, d_t)
        worst = max(worst, abs(estimate_velocity(*samples, period) - v))
    static = [estimate_velocity(d, d, d, 1 / 30) for d in (0.0, 0.5, 3.7, 9.0)]
    ok = worst <= 1e-9 and all(s == 0.0 for s in static)
    return _record(6, ok, f"{n} profiles, max err {worst:.2e}, static exact: {ok}")


def criterion_7():
    f_frames = safe_frames = bad_f = bad_safe = 0
    for name in EXPERIMENTS:
        log = scripted_experiment(name, seed=7)
        for res in replay(log, use_truth=True).results:
            labels = set(res.truth_scenarios.values())
            vals = res.scale_values
            if "F" in labels:
                f_frames += 1
                if not (vals["KDF"] > vals["GSI"] and vals["HSF"] > vals["GSI"]):
                    bad_f += 1
            if labels and labels <= {"A", "B"}:
                safe_frames += 1
                if any(v < 0.95 for v in vals.values()):
                    bad_safe += 1
    ok = f_frames > 0 and safe_frames > 0 and bad_f == 0 and bad_safe == 0
    return _record(
        7, ok, f"{f_frames} F frames ({bad_f} bad), {safe_frames} all-safe frames ({bad_safe} bad)"
    )


def _min_gap(robot, humans, p) -> float:
    vals = sorted(
        gsi_directional(gsi_hat(distance(robot, h[:2]), h.rel_velocity, p).clamped, bearing(robot, h[:2]))
        for h in humans
    )
    return min((b - a for a, b in zip(vals, vals[1:])), default=math.inf)


def _interior_config(rng, p, tie_gap: float = 3.0):
    """Random robot pose and humans with every per-human term off its clamps.

    Configurations where two humans' indices lie within ``tie_gap * tau`` of
    each other are redrawn: there the smooth minimum turns over on a length
    scale close to the 1 cm step, so that step cannot resolve it.  The second
    return value counts redraws for that reason.
    """
    ties = 0
    while True:
        robot = Pose2(*rng.uniform(-3, 3, 2), float(rng.uniform(-math.pi, math.pi)))
        humans = []
        for _ in range(int(rng.integers(1, 5))):
            r = rng.uniform(0.8, 3.6)
            th = rng.uniform(-1.3, 1.3)
            a = robot.theta + th
            humans.append(WorldHuman(robot.x + r * math.cos(a), robot.y + r * math.sin(a),
                                     float(rng.uniform(-0.5, 0.5))))
        ok = True
        for h in humans:
            d = math.hypot(h.x - robot.x, h.y - robot.y)
            base = gsi_hat(d, h.rel_velocity, p).base
            if not 0.05 < base < 0.95:
                ok = False
        if ok and _min_gap(robot, humans, p) < tie_gap * p.tau:
            ties += 1
            continue
        if ok:
            return robot, humans, ties


def criterion_8(n: int = 100):
    p = SafetyParams()
    rng = np.random.default_rng(8)
    worst_angle = worst_mag = 0.0
    ties = 0
    for _ in range(n):
        robot, humans, k = _interior_config(rng, p)
        ties += k
        g1 = finite_difference_gradient(robot, humans, p, 0.01)
        g2 = finite_difference_gradient(robot, humans, p, 0.001)
        cos = float(np.dot(g1, g2) / (np.linalg.norm(g1) * np.linalg.norm(g2)))
        worst_angle = max(worst_angle, math.acos(min(1.0, max(-1.0, cos))))
        vec = gsi_gradient(robot, humans, p)
        worst_mag = max(worst_mag, abs(float(np.linalg.norm(vec.vector)) - collective_at(robot, humans, p)))
    ok = worst_angle <= 1e-4 and worst_mag <= 1e-9
    return _record(
        8,
        ok,
        f"{n} configs ({ties} near-tie draws excluded), max angle {worst_angle:.2e} rad, "
        f"max |mag err| {worst_mag:.2e}",
    )


def criterion_9():
    task = fuse_only_mape(scripted_experiment("random", seed=9, noise="task-robot"))
    obs = fuse_only_mape(scripted_experiment("random", seed=9, noise="observer"))
    n = len(scripted_experiment("random", seed=9).frames)
    ok = n >= 1000 and 8 <= task <= 15 and 3.5 <= obs <= 7
    return _record(9, ok, f"{n} frames, task-robot {task:.2f}%, observer {obs:.2f}%")


def criterion_10():
    p = SafetyParams()
    rng = np.random.default_rng(10)
    robot = Pose2(0.0, 0.0, 0.0)
    frames = [
        {f"h{i}": RelativeState(float(rng.uniform(0.3, 8)), float(rng.uniform(-2, 2)),
                                float(rng.uniform(-math.pi, math.pi))) for i in range(3)}
        for _ in range(1800)
    ]
    t0 = time.perf_counter()
    for i, states in enumerate(frames):
        evaluate_frame(robot, states, p, timestamp=i / 30)
    elapsed = time.perf_counter() - t0
    return _record(10, elapsed < 1.0, f"1800 frames x 3 humans in {elapsed:.3f} s")


def criterion_11():
    wide = replay(generate(passing_script(2.5), noise="none", seed=0), use_truth=True)
    close = replay(generate(passing_script(0.6), noise="none", seed=0), use_truth=True)
    same_timing = wide.timestamps == close.timestamps

    def mean(r):
        vals = [v for v in r.scale_series["GSI"] if v is not None]
        return sum(vals) / len(vals)

    mw, mc = mean(wide), mean(close)
    ok = same_timing and mw > mc
    return _record(11, ok, f"wide-pass mean {mw:.4f} > close-pass mean {mc:.4f}")


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 12)}


@pytest.mark.parametrize("n", list(CRITERIA))
def test_criterion(n):
    ok, detail = CRITERIA[n]()
    assert ok, f"criterion {n}: {detail}"


def report_lines() -> list[str]:
    return [
        f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        for n, (ok, detail) in sorted(RESULTS.items())
    ]


if __name__ == "__main__":
    for fn in CRITERIA.values():
        fn()
    print("\n".join(report_lines()))
    raise SystemExit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
