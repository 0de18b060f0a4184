"""Waypoint trajectories, synthetic keypoint observations and log replay.

Agents move piecewise-linearly between timed knots and hold their last
position afterwards.  Ground-truth closing speed is computed analytically
from the segment velocities, so it is exact for every frame.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import asdict, dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .baselines import Scale, get_scales
from .core import Pose2, RelativeState, SafetyInputError, bearing, distance
from .estimation import EstimatorConfig, KeypointDetection, Tracker, fuse_keypoints
from .gsi import SafetyFrame, evaluate_frame
from .params import SafetyParams
from .scenario import classify_scenario
from .tracklog import FORMAT_NAME, FORMAT_VERSION, HumanObservation, LogFrame, TrackLog

DEFAULT_RATE = 30.0
MAX_HUMAN_SPEED = 2.0
ROBOT = "robot"

Knot = tuple[float, tuple[float, float]]


class Trajectory:
    """Piecewise-linear path through ``(t, (x, y))`` knots."""

    def __init__(self, knots: Sequence[Knot]):
        if not knots:
            raise SafetyInputError("trajectory needs at least one knot")
        self.times = [float(t) for t, _ in knots]
        self.points = [(float(x), float(y)) for _, (x, y) in knots]
        for i in range(1, len(self.times)):
            if not self.times[i] > self.times[i - 1]:
                raise SafetyInputError(
                    f"knot {i}: time {self.times[i]} is not after {self.times[i - 1]}"
                )

    def _segment(self, t: float) -> int:
        return bisect.bisect_right(self.times, t) - 1

    def position(self, t: float) -> tuple[float, float]:
        i = self._segment(t)
        if i < 0:
            return self.points[0]
        if i >= len(self.times) - 1:
            return self.points[-1]
        t0, t1 = self.times[i], self.times[i + 1]
        (x0, y0), (x1, y1) = self.points[i], self.points[i + 1]
        a = (t - t0) / (t1 - t0)
        return (x0 + a * (x1 - x0), y0 + a * (y1 - y0))

    def velocity(self, t: float) -> tuple[float, float]:
        """Velocity of the segment starting at or before ``t`` (zero outside the knots)."""
        i = self._segment(t)
        if i < 0 or i >= len(self.times) - 1:
            return (0.0, 0.0)
        dt = self.times[i + 1] - self.times[i]
        (x0, y0), (x1, y1) = self.points[i], self.points[i + 1]
        return ((x1 - x0) / dt, (y1 - y0) / dt)

    def speeds(self) -> list[float]:
        out = []
        for i in range(len(self.times) - 1):
            (x0, y0), (x1, y1) = self.points[i], self.points[i + 1]
            out.append(math.hypot(x1 - x0, y1 - y0) / (self.times[i + 1] - self.times[i]))
        return out

    @property
    def end_time(self) -> float:
        return self.times[-1]


@dataclass
class WaypointScript:
    """Timed knots per agent.  ``robot_heading`` is a fixed angle (rad) or ``"velocity"``."""

    humans: dict[str, list[Knot]]
    robot: list[Knot] = field(default_factory=lambda: [(0.0, (0.0, 0.0))])
    robot_heading: float | str = 0.0
    duration: float | None = None
    max_human_speed: float = MAX_HUMAN_SPEED
    name: str = "custom"

    def validate(self) -> None:
        trajectories(self)

    @property
    def end_time(self) -> float:
        if self.duration is not None:
            return self.duration
        return max(Trajectory(k).end_time for k in [self.robot, *self.humans.values()])


def trajectories(script: WaypointScript) -> tuple[Trajectory, dict[str, Trajectory]]:
    try:
        robot = Trajectory(script.robot)
    except SafetyInputError as exc:
        raise SafetyInputError(f"robot: {exc}") from None
    humans = {}
    for hid, knots in script.humans.items():
        try:
            traj = Trajectory(knots)
        except SafetyInputError as exc:
            raise SafetyInputError(f"human {hid!r}: {exc}") from None
        for i, speed in enumerate(traj.speeds()):
            if speed > script.max_human_speed + 1e-12:
                raise SafetyInputError(
                    f"human {hid!r}: segment from knot {i} to knot {i + 1} moves at "
                    f"{speed:.3f} m/s, above the {script.max_human_speed} m/s limit"
                )
        humans[hid] = traj
    return robot, humans


@dataclass(frozen=True)
class NoiseModel:
    """Synthetic sensing errors.

    ``distance_noise_pct`` is the target mean absolute percentage error of a
    human's range: a per-frame multiplicative Gaussian factor shared by all
    of the human's keypoints, with standard deviation scaled so its mean
    absolute value equals the target.
    """

    distance_noise_pct: float = 0.0
    keypoint_jitter: float = 0.0  # m, independent per keypoint
    base_confidence: float = 0.97
    confidence_decay: float = 0.0  # per m of range
    confidence_jitter: float = 0.0
    dropout_probability: float = 0.0
    n_keypoints: int = 5

    def __post_init__(self) -> None:
        if self.distance_noise_pct < 0 or self.keypoint_jitter < 0 or self.confidence_jitter < 0:
            raise SafetyInputError("noise magnitudes must be >= 0")
        if not 0 <= self.dropout_probability < 1:
            raise SafetyInputError("dropout_probability must be in [0, 1)")
        if not 0 <= self.base_confidence <= 1:
            raise SafetyInputError("base_confidence must be in [0, 1]")
        if self.n_keypoints < 1:
            raise SafetyInputError("n_keypoints must be >= 1")

    @property
    def relative_sigma(self) -> float:
        return self.distance_noise_pct / 100.0 * math.sqrt(math.pi / 2.0)

    @property
    def noiseless(self) -> bool:
        return (
            self.distance_noise_pct == 0
            and self.keypoint_jitter == 0
            and self.confidence_jitter == 0
            and self.confidence_decay == 0
            and self.dropout_probability == 0
        )


NOISE_PRESETS: dict[str, NoiseModel] = {
    "none": NoiseModel(),
    "task-robot": NoiseModel(
        distance_noise_pct=11.3,
        keypoint_jitter=0.02,
        base_confidence=0.97,
        confidence_decay=0.004,
        confidence_jitter=0.03,
        dropout_probability=0.02,
    ),
    "observer": NoiseModel(
        distance_noise_pct=5.07,
        keypoint_jitter=0.01,
        base_confidence=0.98,
        confidence_decay=0.002,
        confidence_jitter=0.02,
        dropout_probability=0.005,
    ),
}


def noise_preset(name: str) -> NoiseModel:
    try:
        return NOISE_PRESETS[name]
    except KeyError:
        raise SafetyInputError(f"unknown noise preset {name!r}; choose from {list(NOISE_PRESETS)}")


def _observe(d: float, noise: NoiseModel, rng: np.random.Generator) -> list[KeypointDetection]:
    if noise.noiseless:
        return [KeypointDetection(k, d, noise.base_confidence) for k in range(noise.n_keypoints)]
    if rng.random() < noise.dropout_probability:
        return []
    scale = 1.0 + noise.relative_sigma * rng.standard_normal()
    jitter = noise.keypoint_jitter * rng.standard_normal(noise.n_keypoints)
    conf = (
        noise.base_confidence
        - noise.confidence_decay * d
        + noise.confidence_jitter * rng.standard_normal(noise.n_keypoints)
    )
    dk = np.maximum(d * scale + jitter, 0.0)
    conf = np.clip(conf, 0.0, 1.0)
    return [KeypointDetection(k, float(dk[k]), float(conf[k])) for k in range(noise.n_keypoints)]


def _closing_speed(rp, rv, hp, hv) -> float:
    dx, dy = hp[0] - rp[0], hp[1] - rp[1]
    d = math.hypot(dx, dy)
    if d == 0:
        return 0.0
    # v = -d(dist)/dt
    return -(dx * (hv[0] - rv[0]) + dy * (hv[1] - rv[1])) / d


def generate(
    script: WaypointScript,
    rate: float = DEFAULT_RATE,
    noise: NoiseModel | str | None = None,
    seed: int = 0,
    params: SafetyParams | None = None,
    keypoints: bool = True,
) -> TrackLog:
    """Sample ``script`` at ``rate`` Hz into a TrackLog.

    Each human carries its exact relative state, its scenario letter and,
    if ``keypoints``, noisy keypoint observations drawn from ``noise``.
    Identical arguments produce identical logs.
    """
    if not rate > 0:
        raise SafetyInputError(f"rate must be > 0, got {rate}")
    params = params or SafetyParams()
    if isinstance(noise, str):
        noise = noise_preset(noise)
    noise = noise or NoiseModel()
    robot_traj, human_trajs = trajectories(script)
    rng = np.random.default_rng(seed)
    n_frames = int(math.floor(script.end_time * rate + 1e-9)) + 1
    header = {
        "record": "header",
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "script": script.name,
        "sample_rate": float(rate),
        "humans": list(human_trajs),
        "seed": seed,
        "noise": asdict(noise),
        "params": params.as_dict(),
        "keypoints": keypoints,
    }
    log = TrackLog(header)
    heading = script.robot_heading if not isinstance(script.robot_heading, str) else 0.0
    for i in range(n_frames):
        t = i / rate
        rp = robot_traj.position(t)
        rv = robot_traj.velocity(t)
        if script.robot_heading == "velocity" and (rv[0] or rv[1]):
            heading = math.atan2(rv[1], rv[0])
        robot = Pose2(rp[0], rp[1], heading)
        frame = LogFrame(i, t, robot)
        for hid, traj in human_trajs.items():
            hp = traj.position(t)
            d = distance(robot, hp)
            brg = bearing(robot, hp)
            v = _closing_speed(rp, rv, hp, traj.velocity(t))
            truth = RelativeState(d, v, brg)
            frame.humans[hid] = HumanObservation(
                brg,
                _observe(d, noise, rng) if keypoints else None,
                truth,
                hp,
                classify_scenario(d, v, params).id,
            )
        log.frames.append(frame)
    return log


# -- scripted scenes -----------------------------------------------------------


def _polar(r: float, bearing_deg: float) -> tuple[float, float]:
    b = math.radians(bearing_deg)
    return (r * math.cos(b), r * math.sin(b))


def radial_knots(
    bearing_deg: float, start: float, legs: Sequence[tuple[str, float, float]], t0: float = 0.0
) -> list[Knot]:
    """Knots for motion along a fixed bearing from a robot parked at the origin.

    ``legs`` are ``("hold", seconds, _)`` or ``("move", target_range, speed)``.
    """
    t, r = t0, start
    knots = [(t, _polar(r, bearing_deg))]
    for kind, a, b in legs:
        if kind == "hold":
            t += a
        elif kind == "move":
            t += abs(a - r) / b
            r = a
        else:
            raise SafetyInputError(f"unknown leg kind {kind!r}")
        knots.append((t, _polar(r, bearing_deg)))
    return knots


EXPERIMENTS = ("approach-retreat", "two-approach", "cross", "random")


def _random_knots(rng: np.random.Generator, n_waypoints: int = 7) -> list[Knot]:
    t = 0.0
    p = _polar(rng.uniform(2.0, 7.0), rng.uniform(-60.0, 60.0))
    knots = [(t, p)]
    for _ in range(n_waypoints):
        if rng.random() < 0.3:
            t += rng.uniform(0.5, 2.0)
            knots.append((t, p))
            continue
        q = _polar(rng.uniform(1.5, 7.0), rng.uniform(-60.0, 60.0))
        t += math.dist(p, q) / rng.uniform(0.1, 0.4)
        knots.append((t, q))
        p = q
    return knots


def experiment_script(name: str, seed: int = 0) -> WaypointScript:
    """Three-human scenes around a parked robot at the origin facing +x.

    approach-retreat: human 3 approaches (walk, then a jog) and backs off; 1 and 2 stand.
    two-approach: humans 1 and 2 walk up to the robot; 3 stands.
    cross: human 3 approaches while 1 and 2 walk away.
    random: all three wander at slow walking speeds (seeded).
    """
    if name == "approach-retreat":
        humans = {
            "h1": radial_knots(35.0, 5.0, [("hold", 26.0, 0)]),
            "h2": radial_knots(-35.0, 5.0, [("hold", 26.0, 0)]),
            "h3": radial_knots(
                0.0,
                8.0,
                [
                    ("hold", 2.0, 0),
                    ("move", 5.5, 0.7),
                    ("move", 2.0, 1.9),
                    ("move", 0.4, 0.5),
                    ("hold", 2.0, 0),
                    ("move", 6.0, 0.4),
                    ("hold", 1.0, 0),
                ],
            ),
        }
    elif name == "two-approach":
        humans = {
            "h1": radial_knots(35.0, 6.0, [("hold", 1.0, 0), ("move", 1.5, 0.7), ("hold", 2.0, 0)]),
            "h2": radial_knots(-35.0, 6.0, [("hold", 2.0, 0), ("move", 1.5, 0.7), ("hold", 1.0, 0)]),
            "h3": radial_knots(0.0, 4.5, [("hold", 9.5, 0)]),
        }
    elif name == "cross":
        humans = {
            "h1": radial_knots(35.0, 1.5, [("hold", 1.0, 0), ("move", 5.0, 0.4), ("hold", 1.0, 0)]),
            "h2": radial_knots(-35.0, 1.5, [("hold", 1.0, 0), ("move", 5.0, 0.4), ("hold", 1.0, 0)]),
            "h3": radial_knots(0.0, 6.0, [("hold", 1.0, 0), ("move", 1.2, 0.7), ("hold", 2.0, 0)]),
        }
    elif name == "random":
        rng = np.random.default_rng(seed)
        humans = {hid: _random_knots(rng) for hid in ("h1", "h2", "h3")}
    else:
        raise SafetyInputError(f"unknown experiment {name!r}; choose from {list(EXPERIMENTS)}")
    return WaypointScript(humans=humans, name=name)


def scripted_experiment(
    name: str,
    seed: int = 0,
    rate: float = DEFAULT_RATE,
    noise: NoiseModel | str | None = None,
    params: SafetyParams | None = None,
) -> TrackLog:
    return generate(experiment_script(name, seed), rate, noise, seed, params)


def setting_script(setting: int) -> WaypointScript:
    """Single-human trajectories relative to a driving robot.

    1: straight at the robot, 2: perpendicular fly-by, 3: diagonal crossing.
    The robot drives along +x at 0.4 m/s (parking at the origin in setting 1).
    """
    robot = [(0.0, (-4.0, 0.0)), (20.0, (4.0, 0.0))]
    if setting == 1:
        robot = [(0.0, (-4.0, 0.0)), (10.0, (0.0, 0.0)), (20.0, (0.0, 0.0))]
        human = [(0.0, (6.0, 0.0)), (8.0, (1.0, 0.0)), (20.0, (1.0, 0.0))]
    elif setting == 2:
        human = [(0.0, (0.0, 1.5)), (20.0, (0.0, 3.0))]
    elif setting == 3:
        human = [(0.0, (5.0, 4.0)), (20.0, (-3.0, -4.0))]
    else:
        raise SafetyInputError(f"setting must be 1, 2 or 3, got {setting}")
    return WaypointScript(
        humans={"h1": human}, robot=robot, robot_heading="velocity", name=f"setting-{setting}"
    )


def passing_script(clearance: float, speed: float = 0.5, half_length: float = 5.0) -> WaypointScript:
    """Robot drives past one standing human at lateral offset ``clearance``.

    Two such scripts with different clearances share identical waypoint timing,
    so they compare a wide-pass and a close-pass planner on equal terms.
    """
    if not clearance > 0:
        raise SafetyInputError(f"clearance must be > 0, got {clearance}")
    t_end = 2.0 * half_length / speed
    robot = [(0.0, (-half_length, 0.0)), (t_end, (half_length, 0.0))]
    human = [(0.0, (0.0, clearance)), (t_end, (0.0, clearance))]
    return WaypointScript(
        humans={"h1": human}, robot=robot, robot_heading="velocity", name=f"pass-{clearance:g}"
    )


# -- replay --------------------------------------------------------------------


@dataclass
class EstimatorErrors:
    distance_mape: float  # percent
    n_distance: int
    velocity_mae: float | None  # m/s
    velocity_mape: float | None  # percent, frames with |v_true| >= min_speed
    n_velocity: int

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class FrameResult:
    frame: int
    safety: SafetyFrame
    scale_values: dict[str, float | None]  # aggregated per scale
    per_human: dict[str, dict[Hashable, float]]
    truth_scenarios: dict[Hashable, str]


class Replayer:
    """Incremental replay: feed LogFrames one at a time, read results as they come.

    Estimates states from keypoints (``use_truth=False``) or takes the
    ground-truth states recorded in the log.
    """

    def __init__(
        self,
        p: SafetyParams | None = None,
        scales: Sequence[Scale] | Sequence[str] | None = None,
        use_truth: bool = False,
        estimator: EstimatorConfig | None = None,
        min_speed: float = 0.05,
    ):
        self.p = p or SafetyParams()
        if scales is None or (len(scales) and isinstance(scales[0], str)):
            scales = get_scales(scales)
        self.scales = list(scales)
        self.use_truth = use_truth
        self.estimator = estimator or EstimatorConfig()
        self.tracker = Tracker(self.estimator)
        self.min_speed = min_speed
        self._dist_err: list[float] = []
        self._vel_err: list[float] = []
        self._vel_pct: list[float] = []

    def _estimate(self, fr: LogFrame) -> dict[Hashable, RelativeState]:
        obs = {
            hid: (o.keypoints, o.bearing) for hid, o in fr.humans.items() if o.keypoints is not None
        }
        tracks = self.tracker.step(fr.frame, obs)
        states = {t.human_id: t.latest_state for t in tracks if t.latest_state is not None}
        for hid, o in fr.humans.items():
            track = self.tracker.tracks.get(hid)
            if o.truth is None or track is None or track.last_seen != fr.frame:
                continue
            fused = track.history[-1][1]
            if o.truth.distance > 0:
                self._dist_err.append(abs(fused - o.truth.distance) / o.truth.distance)
            est = states.get(hid)
            if est is not None and abs(o.truth.rel_velocity) >= self.min_speed:
                err = abs(est.rel_velocity - o.truth.rel_velocity)
                self._vel_err.append(err)
                self._vel_pct.append(err / abs(o.truth.rel_velocity))
        return states

    def step(self, fr: LogFrame) -> FrameResult:
        if self.use_truth:
            states = {hid: o.truth for hid, o in fr.humans.items() if o.truth is not None}
        else:
            states = self._estimate(fr)
        frame = evaluate_frame(fr.robot, states, self.p, timestamp=fr.timestamp)
        values: dict[str, float | None] = {}
        per_human: dict[str, dict] = {}
        for s in self.scales:
            if not states:
                values[s.name], per_human[s.name] = None, {}
                continue
            if s.name == "GSI":
                ph = {hid: h.gsi_directional for hid, h in frame.per_human.items()}
                values[s.name] = frame.collective_gsi
            else:
                ph = {hid: s.per_human(st, self.p) for hid, st in states.items()}
                values[s.name] = s.aggregate(list(ph.values()), self.p)
            per_human[s.name] = ph
        truth_scn = {hid: o.scenario for hid, o in fr.humans.items() if o.scenario}
        return FrameResult(fr.frame, frame, values, per_human, truth_scn)

    def errors(self) -> EstimatorErrors | None:
        if not self._dist_err:
            return None
        n_v = len(self._vel_err)
        return EstimatorErrors(
            100.0 * math.fsum(self._dist_err) / len(self._dist_err),
            len(self._dist_err),
            math.fsum(self._vel_err) / n_v if n_v else None,
            100.0 * math.fsum(self._vel_pct) / n_v if n_v else None,
            n_v,
        )


@dataclass
class ReplayResult:
    results: list[FrameResult]
    errors: EstimatorErrors | None
    source: str  # "keypoints" or "truth"

    @property
    def frames(self) -> list[SafetyFrame]:
        return [r.safety for r in self.results]

    @property
    def timestamps(self) -> list[float]:
        return [r.safety.timestamp for r in self.results]

    @property
    def scale_series(self) -> dict[str, list[float | None]]:
        names = self.results[0].scale_values.keys() if self.results else ()
        return {n: [r.scale_values[n] for r in self.results] for n in names}

    @property
    def truth_scenarios(self) -> list[dict[Hashable, str]]:
        return [r.truth_scenarios for r in self.results]


def replay(
    log: TrackLog,
    p: SafetyParams | None = None,
    scales: Sequence[Scale] | Sequence[str] | None = None,
    use_truth: bool | None = None,
    estimator: EstimatorConfig | None = None,
    min_speed: float = 0.05,
) -> ReplayResult:
    """Run every frame of ``log`` through estimation (or ground truth) and all scales.

    ``use_truth=None`` estimates from keypoints when the log has any, else uses
    ground truth.  Estimator errors are reported only when the log carries
    both keypoints and ground truth.
    """
    if use_truth is None:
        use_truth = not log.has_keypoints
    estimator = estimator or EstimatorConfig(sample_period=1.0 / log.sample_rate)
    rp = Replayer(p, scales, use_truth, estimator, min_speed)
    results = [rp.step(fr) for fr in log.frames]
    return ReplayResult(results, None if use_truth else rp.errors(), "truth" if use_truth else "keypoints")


def fuse_only_mape(log: TrackLog, estimator: EstimatorConfig | None = None) -> float:
    """Fused-distance MAPE (percent) over all frames with a detection and ground truth."""
    estimator = estimator or EstimatorConfig(sample_period=1.0 / log.sample_rate)
    errs = []
    for fr in log.frames:
        for o in fr.humans.values():
            if o.truth is None or o.keypoints is None:
                continue
            fused = fuse_keypoints(o.keypoints, estimator)
            if fused is not None and o.truth.distance > 0:
                errs.append(abs(fused - o.truth.distance) / o.truth.distance)
    if not errs:
        raise SafetyInputError("log has no frames with both detections and ground truth")
    return 100.0 * math.fsum(errs) / len(errs)
