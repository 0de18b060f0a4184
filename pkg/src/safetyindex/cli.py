"""Command-line front end: simulate, evaluate, compare, sweep."""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import sys
from collections import Counter
from pathlib import Path
from typing import IO, Iterator, Sequence

import numpy as np

from . import tracklog
from .baselines import get_scales
from .config import RunConfig, load_config
from .gsi import gsi_collective, gsi_hat_array
from .scenario import SCENARIOS, appropriateness_matrix, deviations
from .sim import (
    EXPERIMENTS,
    Replayer,
    WaypointScript,
    generate,
    passing_script,
    scripted_experiment,
    setting_script,
)

FIG4_VALUES = (0.7, 0.9, 0.4)


class CliError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"expected comma-separated numbers, got {text!r}") from None


@contextlib.contextmanager
def _open_out(path: str | None) -> Iterator[IO[str]]:
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fp:
            yield fp


def _config(args) -> RunConfig:
    scales = args.scales.split(",") if getattr(args, "scales", None) else None
    return load_config(
        args.config,
        rho=args.rho,
        tau=args.tau,
        seed=args.seed,
        noise_preset=args.noise_preset,
        scales=scales,
        format=args.format,
    )


def _config_comment(cmd: str, cfg: RunConfig, extra: dict | None = None) -> str:
    payload = {"command": cmd, "config": cfg.as_dict(), **(extra or {})}
    return "# " + json.dumps(payload, separators=(",", ":"), sort_keys=True) + "\n"


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    return repr(float(x))


# -- simulate -----------------------------------------------------------------


def load_script(path: str | Path) -> WaypointScript:
    """Read a JSON waypoint script.

    ``{"humans": {"h1": [[t, x, y], ...]}, "robot": [[t, x, y], ...],
    "robot_heading_deg": 0 | "velocity", "max_human_speed": 2.0}``
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))

    def knots(rows):
        return [(float(t), (float(x), float(y))) for t, x, y in rows]

    heading = data.get("robot_heading_deg", 0.0)
    return WaypointScript(
        humans={str(h): knots(k) for h, k in data["humans"].items()},
        robot=knots(data.get("robot", [[0.0, 0.0, 0.0]])),
        robot_heading=heading if heading == "velocity" else math.radians(float(heading)),
        duration=data.get("duration"),
        max_human_speed=float(data.get("max_human_speed", 2.0)),
        name=str(data.get("name", Path(path).stem)),
    )


def cmd_simulate(args) -> int:
    cfg = _config(args)
    params = cfg.safety_params()
    if args.experiment:
        log = scripted_experiment(args.experiment, cfg.seed, cfg.rate, cfg.noise_preset, params)
    else:
        if args.setting:
            script = setting_script(args.setting)
        elif args.pass_clearance is not None:
            script = passing_script(args.pass_clearance)
        else:
            script = load_script(args.script)
        log = generate(script, cfg.rate, cfg.noise_preset, cfg.seed, params, keypoints=not args.truth_only)
    log.header["config"] = cfg.as_dict()
    with _open_out(args.out) as fp:
        log.write(fp)
    return 0


# -- evaluate -----------------------------------------------------------------


def _percentiles(values: Sequence[float]) -> dict | str:
    if not values:
        return "not applicable"
    arr = np.asarray(values)
    out = {"min": float(arr.min()), "mean": float(arr.mean()), "max": float(arr.max())}
    for q in (5, 25, 50, 75, 95):
        out[f"p{q}"] = float(np.percentile(arr, q))
    return out


def evaluate_stream(fp_in: IO[str], cfg: RunConfig, fp_out: IO[str], fmt: str) -> dict:
    """Replay a TrackLog stream, writing one output row per frame as it goes.

    Returns the summary block.
    """
    records = tracklog.iter_records(fp_in)
    header, _ = next(records)
    rate = float(header["sample_rate"])
    est = cfg.replace(rate=rate).estimator_config()
    humans = [str(h) for h in header.get("humans", [])]
    use_truth = cfg.use_truth or header.get("keypoints") is False
    rp = Replayer(cfg.safety_params(), list(cfg.scales), use_truth, est)
    extra = {"log": {k: header.get(k) for k in ("script", "seed", "noise", "sample_rate")}}
    writer = None
    if fmt == "csv":
        fp_out.write(_config_comment("evaluate", cfg, extra))
        writer = csv.writer(fp_out, lineterminator="\n")
        cols = ["frame", "t", "n_humans", "no_humans", "collective_gsi"]
        cols += [f"{s.name}_mean" for s in rp.scales if s.name != "GSI"]
        for h in humans:
            cols += [f"gsi_{h}", f"scenario_{h}"]
        writer.writerow(cols)
    else:
        fp_out.write(json.dumps({"record": "header", "command": "evaluate", "config": cfg.as_dict(), **extra}) + "\n")
    collective, n_frames, n_empty = [], 0, 0
    scenario_frames: Counter = Counter()
    for _, fr in records:
        res = rp.step(fr)
        sf = res.safety
        n_frames += 1
        if sf.no_humans:
            n_empty += 1
        else:
            collective.append(sf.collective_gsi)
        for h in sf.per_human.values():
            scenario_frames[h.scenario.id] += 1
        if writer is not None:
            row = [fr.frame, repr(fr.timestamp), len(sf.per_human), int(sf.no_humans), _fmt(sf.collective_gsi)]
            row += [_fmt(res.scale_values[s.name]) for s in rp.scales if s.name != "GSI"]
            for h in humans:
                hs = sf.per_human.get(h)
                row += [_fmt(hs.gsi_directional if hs else None), hs.scenario.id if hs else ""]
            writer.writerow(row)
        else:
            fp_out.write(json.dumps({
                "record": "frame",
                "frame": fr.frame,
                "t": fr.timestamp,
                "no_humans": sf.no_humans,
                "collective_gsi": "not applicable" if sf.no_humans else sf.collective_gsi,
                "scales": res.scale_values,
                "humans": {
                    str(hid): {
                        "distance": hs.state.distance,
                        "rel_velocity": hs.state.rel_velocity,
                        "bearing_deg": math.degrees(hs.state.bearing),
                        "gsi_hat": hs.gsi_hat,
                        "gsi": hs.gsi_directional,
                        "scenario": hs.scenario.id,
                        "zone": hs.zone.label,
                    }
                    for hid, hs in sf.per_human.items()
                },
            }) + "\n")
        fp_out.flush()
    summary = {
        "config": cfg.as_dict(),
        **extra,
        "n_frames": n_frames,
        "n_frames_no_humans": n_empty,
        "collective_gsi": _percentiles(collective),
        "time_in_scenario_s": {s: scenario_frames[s] / rate for s in SCENARIOS},
    }
    errors = None if use_truth else rp.errors()
    if errors is not None:
        summary["estimator_errors"] = errors.as_dict()
    return summary


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    if args.use_truth:
        cfg = cfg.replace(use_truth=True)
    with open(args.log, encoding="utf-8") as fp_in, _open_out(args.out) as fp_out:
        try:
            summary = evaluate_stream(fp_in, cfg, fp_out, cfg.format)
        except ValueError as exc:
            # rows already streamed stay, but the file says it is incomplete
            fp_out.write(f"# INCOMPLETE: {exc}\n")
            raise
    text = json.dumps(summary, indent=2)
    if args.summary:
        Path(args.summary).write_text(text + "\n", encoding="utf-8")
    (sys.stderr if args.out in (None, "-") else sys.stdout).write(text + "\n")
    return 0


# -- compare ------------------------------------------------------------------


def cmd_compare(args) -> int:
    cfg = _config(args)
    params = cfg.safety_params()
    scales = get_scales(cfg.scales)
    with open(args.log, encoding="utf-8") as fp_in:
        records = tracklog.iter_records(fp_in)
        header, _ = next(records)
        est = cfg.replace(rate=float(header["sample_rate"])).estimator_config()
        use_truth = cfg.use_truth or args.use_truth or header.get("keypoints") is False
        rp = Replayer(params, scales, use_truth, est)
        with _open_out(args.out) as fp:
            fp.write(_config_comment("compare", cfg, {"log": header.get("script")}))
            w = csv.writer(fp, lineterminator="\n")
            w.writerow(["frame", "t"] + [s.name for s in scales])
            for _, fr in records:
                res = rp.step(fr)
                w.writerow([fr.frame, repr(fr.timestamp)] + [_fmt(res.scale_values[s.name]) for s in scales])
    matrix = appropriateness_matrix(scales, params, cfg.bands())
    devs = deviations(matrix)
    stem = args.matrix or (str(Path(args.out).with_suffix("")) + ".matrix" if args.out not in (None, "-") else None)
    grid = matrix.grid()
    dev_text = "deviations from reference table: " + (
        ", ".join(f"{s}/{n}/{m}" for s, n, m in devs) if devs else "none"
    )
    if stem:
        rows = matrix.rows()
        with open(stem + ".csv", "w", encoding="utf-8", newline="") as fp:
            fp.write(_config_comment("compare-matrix", cfg))
            w = csv.DictWriter(fp, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        Path(stem + ".txt").write_text(_config_comment("compare-matrix", cfg) + grid + "\n" + dev_text + "\n")
    out = sys.stderr if args.out in (None, "-") else sys.stdout
    out.write(grid + "\n" + dev_text + "\n")
    return 0


# -- sweep --------------------------------------------------------------------


def sweep_rho(grid, p, axis="distance", points=50, fixed_v=0.0, fixed_d=2.0):
    """Rows of (x, value at each rho) for a distance or velocity axis."""
    if axis == "distance":
        xs = np.linspace(p.d_min, p.d_max, points)
        d, v = xs, np.full_like(xs, fixed_v)
    elif axis == "velocity":
        xs = np.linspace(0.0, p.v_max, points)
        d, v = np.full_like(xs, fixed_d), xs
    else:
        raise CliError(f"axis must be distance or velocity, got {axis!r}")
    cols = [gsi_hat_array(d, v, _with_rho(p, r)) for r in grid]
    return xs, cols


def _with_rho(p, rho):
    from dataclasses import replace

    return replace(p, rho=rho)


def sweep_tau(grid, values=FIG4_VALUES):
    return [gsi_collective(list(values), t) for t in grid]


def cmd_sweep(args) -> int:
    cfg = _config(args)
    p = cfg.safety_params()
    grid = _floats(args.grid)
    if not grid or any(not g > 0 for g in grid):
        raise CliError("--grid must list positive values")
    with _open_out(args.out) as fp:
        w = csv.writer(fp, lineterminator="\n")
        if args.parameter == "rho":
            fp.write(_config_comment("sweep", cfg, {"parameter": "rho", "grid": grid, "axis": args.axis}))
            xs, cols = sweep_rho(grid, p, args.axis, args.points, args.v, args.d)
            w.writerow([args.axis] + [f"rho={g!r}" for g in grid])
            for i, x in enumerate(xs):
                w.writerow([repr(float(x))] + [repr(float(c[i])) for c in cols])
        else:
            values = _floats(args.values) if args.values else list(FIG4_VALUES)
            fp.write(_config_comment("sweep", cfg, {"parameter": "tau", "grid": grid, "values": values}))
            w.writerow(["tau", "collective_gsi", "min", "mean"])
            lo, mean = min(values), sum(values) / len(values)
            for t, c in zip(grid, sweep_tau(grid, values)):
                w.writerow([repr(t), repr(c), repr(lo), repr(mean)])
    return 0


# -- parser -------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--seed", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--scales", help="comma-separated subset of GSI,DI,KDF,HSF,HSA")
    p.add_argument("--noise-preset", choices=["task-robot", "observer", "none"])
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    p.add_argument("--format", choices=["csv", "jsonl"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safetyindex", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a TrackLog")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--experiment", choices=EXPERIMENTS)
    src.add_argument("--script", help="JSON waypoint script")
    src.add_argument("--setting", type=int, choices=[1, 2, 3], help="single-human driving-robot trajectory")
    src.add_argument("--pass", dest="pass_clearance", type=float, metavar="CLEARANCE",
                     help="robot drives past a standing human at this lateral offset (m)")
    p.add_argument("--truth-only", action="store_true", help="omit keypoint observations")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="score every frame of a TrackLog")
    p.add_argument("log")
    p.add_argument("--use-truth", action="store_true", help="score ground-truth states")
    p.add_argument("--summary", help="also write the summary JSON here")
    _common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="per-scale series plus the appropriateness matrix")
    p.add_argument("log")
    p.add_argument("--use-truth", action="store_true")
    p.add_argument("--matrix", help="path stem for the matrix .csv/.txt (default: derived from --out)")
    _common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="rho or tau response curves")
    p.add_argument("parameter", choices=["rho", "tau"])
    p.add_argument("--grid", required=True, help="comma-separated positive values")
    p.add_argument("--axis", choices=["distance", "velocity"], default="distance")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--v", type=float, default=0.0, help="fixed closing speed for the distance axis")
    p.add_argument("--d", type=float, default=2.0, help="fixed distance for the velocity axis")
    p.add_argument("--values", help="per-human values for the tau sweep")
    _common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, CliError, OSError) as exc:
        print(f"safetyindex {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
