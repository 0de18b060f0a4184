import csv
import json
import math

import pytest

from safetyindex import Pose2, RelativeState
from safetyindex.cli import main, sweep_tau
from safetyindex.config import ConfigError, RunConfig, load_config, parse_config
from safetyindex.tracklog import FORMAT_NAME, HumanObservation, LogFrame, TrackLog


def _rows(path):
    with open(path) as fp:
        return list(csv.DictReader(line for line in fp if not line.startswith("#")))


def _header(path) -> dict:
    with open(path) as fp:
        first = fp.readline()
    assert first.startswith("# ")
    return json.loads(first[2:])


def _truth_log(path, frames, rate=30.0):
    humans = sorted({h for fr in frames for h in fr})
    log = TrackLog({"record": "header", "format": FORMAT_NAME, "version": 1,
                    "sample_rate": rate, "humans": humans, "script": "injected", "seed": 0, "keypoints": False})
    for i, states in enumerate(frames):
        fr = LogFrame(i, i / rate, Pose2(0, 0, 0))
        for hid, st in states.items():
            fr.humans[hid] = HumanObservation(st.bearing, None, st, None, None)
        log.frames.append(fr)
    log.save(path)
    return path


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for out in (a, b):
        assert main(["simulate", "--experiment", "approach-retreat", "--seed", "7", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header = json.loads(a.read_text().splitlines()[0])
    cfg = header["config"]
    assert (cfg["rho"], cfg["tau"], cfg["d_min"], cfg["d_max"]) == (1.0, 0.01, 0.46, 3.7)
    assert header["seed"] == 7 and cfg["seed"] == 7


def test_simulate_rejects_superhuman_script(tmp_path, capsys):
    script = tmp_path / "fast.json"
    script.write_text(json.dumps({"humans": {"h1": [[0, 6, 0], [1, 5, 0], [2, 1, 0]]}}))
    assert main(["simulate", "--script", str(script), "--out", str(tmp_path / "x.jsonl")]) == 2
    assert "knot 1 to knot 2" in capsys.readouterr().err


def test_simulate_script_json(tmp_path):
    script = tmp_path / "walk.json"
    script.write_text(json.dumps({
        "name": "walk",
        "humans": {"h1": [[0, 6, 0], [4, 2, 0]]},
        "robot": [[0, 0, 0]],
        "robot_heading_deg": 90,
    }))
    out = tmp_path / "walk.jsonl"
    assert main(["simulate", "--script", str(script), "--noise-preset", "observer", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert json.loads(lines[0])["script"] == "walk"
    assert json.loads(lines[1])["robot"]["theta_deg"] == pytest.approx(90.0)


def test_evaluate_csv_and_summary(tmp_path, capsys):
    log = tmp_path / "ar.jsonl"
    main(["simulate", "--experiment", "approach-retreat", "--seed", "7", "--out", str(log)])
    out, summary = tmp_path / "ar.csv", tmp_path / "ar.json"
    assert main(["evaluate", str(log), "--out", str(out), "--summary", str(summary)]) == 0
    s = json.loads(summary.read_text())
    assert s["log"]["seed"] == 7 and s["config"]["rho"] == 1.0
    assert set(s["time_in_scenario_s"]) == set("ABCDEF")
    assert s["estimator_errors"]["distance_mape"] == pytest.approx(0.0, abs=1e-9)
    rows = _rows(out)
    assert len(rows) == s["n_frames"]
    assert rows[0]["no_humans"] == "1" and rows[0]["collective_gsi"] == "NA"
    assert _header(out)["command"] == "evaluate"
    assert json.loads(capsys.readouterr().out)["n_frames"] == s["n_frames"]


def test_evaluate_idempotent(tmp_path):
    log = tmp_path / "r.jsonl"
    main(["simulate", "--experiment", "random", "--seed", "3", "--noise-preset", "observer", "--out", str(log)])
    outs = []
    for name in ("a.jsonl", "b.jsonl"):
        main(["evaluate", str(log), "--format", "jsonl", "--out", str(tmp_path / name)])
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    first = json.loads(outs[0].splitlines()[0])
    assert first["record"] == "header" and first["config"]["format"] == "jsonl"


def test_evaluate_wide_vs_close(tmp_path):
    means = {}
    for name, clearance in (("wide", "2.5"), ("close", "0.6")):
        log = tmp_path / f"{name}.jsonl"
        main(["simulate", "--pass", clearance, "--out", str(log)])
        summary = tmp_path / f"{name}.json"
        main(["evaluate", str(log), "--use-truth", "--out", str(tmp_path / f"{name}.csv"),
              "--summary", str(summary)])
        means[name] = json.loads(summary.read_text())["collective_gsi"]["mean"]
    assert means["wide"] > means["close"]


def test_evaluate_empty_log_not_applicable(tmp_path):
    log = _truth_log(tmp_path / "empty.jsonl", [{} for _ in range(5)])
    summary = tmp_path / "s.json"
    assert main(["evaluate", str(log), "--out", str(tmp_path / "e.csv"), "--summary", str(summary)]) == 0
    s = json.loads(summary.read_text())
    assert s["collective_gsi"] == "not applicable" and s["n_frames_no_humans"] == 5
    assert all(r["no_humans"] == "1" for r in _rows(tmp_path / "e.csv"))


def test_evaluate_reference_triple_frame(tmp_path):
    states = {f"h{i}": RelativeState(0.46 + 3.24 * g, 0.0, 0.0) for i, g in enumerate((0.7, 0.9, 0.4))}
    log = _truth_log(tmp_path / "triple.jsonl", [states])
    out = tmp_path / "triple.out.jsonl"
    main(["evaluate", str(log), "--format", "jsonl", "--out", str(out)])
    frame = json.loads(out.read_text().splitlines()[1])
    assert frame["collective_gsi"] == pytest.approx(0.410986, abs=1e-6)


def test_evaluate_malformed_log_marks_output(tmp_path, capsys):
    log = tmp_path / "ar.jsonl"
    main(["simulate", "--experiment", "cross", "--out", str(log)])
    lines = log.read_text().splitlines()
    lines[20] = lines[20][:40]
    log.write_text("\n".join(lines))
    out = tmp_path / "bad.csv"
    assert main(["evaluate", str(log), "--out", str(out)]) == 2
    assert "line 21" in capsys.readouterr().err
    assert out.read_text().splitlines()[-1].startswith("# INCOMPLETE")


def test_compare_outputs(tmp_path, capsys):
    log = tmp_path / "ar.jsonl"
    main(["simulate", "--experiment", "approach-retreat", "--out", str(log)])
    out = tmp_path / "cmp.csv"
    assert main(["compare", str(log), "--use-truth", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "F/DI/SH, F/HSA/MH" in text
    rows = _rows(out)
    series = {k: [float(r[k]) for r in rows if r[k] != "NA"] for k in ("GSI", "DI", "KDF", "HSF")}
    assert min(series["GSI"]) <= min(series["KDF"]) and min(series["GSI"]) <= min(series["HSF"])
    matrix = _rows(tmp_path / "cmp.matrix.csv")
    assert all(r["GSI_SH"] == r["GSI_MH"] == "match" for r in matrix)
    assert (tmp_path / "cmp.matrix.txt").read_text().startswith("# ")


def test_compare_di_blind_when_stationary_close(tmp_path):
    log = tmp_path / "ar.jsonl"
    main(["simulate", "--experiment", "approach-retreat", "--out", str(log)])
    out = tmp_path / "cmp.csv"
    main(["compare", str(log), "--use-truth", "--scales", "GSI,DI", "--out", str(out)])
    rows = _rows(out)
    # human 3 holds 0.4 m from the robot from about 10.61 s to 12.61 s
    hold = [r for r in rows if 10.7 < float(r["t"]) < 12.5]
    assert hold and all(float(r["DI"]) == 1.0 for r in hold)
    assert all(float(r["GSI"]) <= 0.011 + 1e-9 for r in hold)


def test_sweep_rho(tmp_path):
    out = tmp_path / "rho.csv"
    assert main(["sweep", "rho", "--grid", "0.5,1,2", "--points", "40", "--out", str(out)]) == 0
    rows = _rows(out)
    cols = ["rho=0.5", "rho=1.0", "rho=2.0"]
    curves = {c: [float(r[c]) for r in rows] for c in cols}
    for c in cols:
        assert all(a <= b for a, b in zip(curves[c], curves[c][1:]))
    for a, b, c in zip(*curves.values()):
        assert c <= b <= a
    assert _header(out)["grid"] == [0.5, 1.0, 2.0]


def test_sweep_tau(tmp_path):
    out = tmp_path / "tau.csv"
    grid = [1e-4, 1e-3, 0.01, 0.1, 1.0, 10.0]
    main(["sweep", "tau", "--grid", ",".join(map(str, grid)), "--out", str(out)])
    vals = [float(r["collective_gsi"]) for r in _rows(out)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert abs(vals[0] - 0.4) <= 1e-4 * math.log(3)
    assert vals[-1] == pytest.approx(2 / 3, abs=0.01)  # large tau tends to the mean
    assert sweep_tau([0.01])[0] == pytest.approx(0.410986, abs=1e-6)


@pytest.mark.parametrize("grid", ["", "0,1", "-1", "a,b"])
def test_sweep_rejects_bad_grid(grid, tmp_path):
    assert main(["sweep", "tau", "--grid", grid, "--out", str(tmp_path / "x.csv")]) == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# test\nrho = 2\ntau=0.05  # warmer\nscales = gsi, hsf\nuse_truth = yes\n")
    rc = load_config(cfg, seed=4)
    assert (rc.rho, rc.tau, rc.scales, rc.use_truth, rc.seed) == (2.0, 0.05, ("GSI", "HSF"), True, 4)
    assert load_config(cfg, rho=0.5).rho == 0.5
    assert rc.safety_params().rho == 2.0


@pytest.mark.parametrize(
    "text, key",
    [("rho = -1", "rho"), ("tau = x", "tau"), ("colour = red", "colour"), ("noise_preset = loud", "noise_preset"),
     ("scales = GSI, FOO", "scales"), ("rho 2", "line 1"), ("d_min = 5", "d_min"), ("rho=1\nrho=2", "rho")],
)
def test_config_errors_name_the_field(text, key):
    with pytest.raises(ConfigError) as exc:
        load_config(None, **parse_config(text))
    assert exc.value.key == key


def test_cli_config_error_exit(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("tau = 0\n")
    assert main(["simulate", "--experiment", "cross", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    assert "'tau'" in capsys.readouterr().err


def test_run_config_roundtrip():
    rc = RunConfig(rho=2.0, scales=("GSI",))
    assert RunConfig(**{**rc.as_dict(), "scales": tuple(rc.as_dict()["scales"])}) == rc
    assert rc.replace(tau=0.1).tau == 0.1


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "safetyindex", "sweep", "tau", "--grid", "0.01"],
                         capture_output=True, text=True, check=True)
    assert "0.41098" in res.stdout
