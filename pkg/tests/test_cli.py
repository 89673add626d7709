import json

import numpy as np
import pytest

from ppthin import StepPath, load_path, load_rate_curve, save_path, save_window, PointMeasureWindow
from ppthin.cli import main

MANIFEST_KEYS = {"command", "config", "master_seed", "version", "outputs", "wall_clock_seconds"}


def read_json(d, name):
    with open(d / name) as fh:
        return json.load(fh)


def manifest_of(d):
    man = read_json(d, "manifest.json")
    assert MANIFEST_KEYS <= set(man)
    return man


# counterexample


def test_counterexample_report(tmp_path):
    assert main(["counterexample", "--out", str(tmp_path)]) == 0
    rep = read_json(tmp_path, "report.json")
    assert rep["phi_x"] == {"jump_times": [1.0], "jump_count": 1}
    for n in (1, 2, 4, 8, 16):
        entry = rep["phi_xn"][str(n)]
        assert entry["jump_count"] == 0
        assert entry["sup_distance"] == 1.0 / n
    assert rep["conditions"] == {"a": True, "b": True, "c": True, "d": False}
    assert rep["violations_d"] == [[0, 1.0, 1.0]]
    man = manifest_of(tmp_path)
    assert man["command"] == "counterexample"
    assert man["master_seed"] is None
    assert "phi_x.csv" in man["outputs"] and "xn_16.csv" in man["outputs"]
    zx = load_path(str(tmp_path / "phi_x.csv"))
    assert zx.jump_times.tolist() == [1.0] and zx.horizon == 2.0


# simulate


def test_simulate_meanfield_t0(tmp_path):
    rc = main(
        ["simulate", "--out", str(tmp_path), "--seed", "5",
         "--set", "model=meanfield", "--set", "t=0.0"]
    )
    assert rc == 0
    z = load_path(str(tmp_path / "counting_1.csv"))
    assert z.jump_times.size == 0
    man = manifest_of(tmp_path)
    assert man["master_seed"] == 5
    assert man["model"] == "meanfield"
    assert man["windows"] == {}
    assert man["outputs"] == ["counting_1.csv", "intensity.csv"]


def test_simulate_hawkes_determinism(tmp_path):
    argv = ["--seed", "9", "--set", "model=hawkes", "--set", "n=4",
            "--set", "t=1.0", "--set", "h=0.1", "--set", "n_obs=2"]
    d1, d2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--out", str(d1)] + argv) == 0
    assert main(["simulate", "--out", str(d2)] + argv) == 0
    man = manifest_of(d1)
    names = man["outputs"]
    assert "prelimit_intensity.csv" in names and "limit_intensity.csv" in names
    assert "counting_prelimit_2.csv" in names and "counting_limit_2.csv" in names
    assert "window_2.csv" in names
    for name in names:
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
    m1, m2 = manifest_of(d1), manifest_of(d2)
    m1.pop("wall_clock_seconds"), m2.pop("wall_clock_seconds")
    assert m1 == m2
    # window metadata makes the CSVs round-trippable
    meta = man["windows"]["window_1.csv"]
    from ppthin import load_window

    w = load_window(str(d1 / "window_1.csv"), meta["horizon"], meta["mark_bound"])
    assert w.horizon == meta["horizon"]


def test_simulate_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model = hawkes\nn = 2\nt = 1.0\nh = 0.1\nseed = 3\n")
    out = tmp_path / "out"
    rc = main(["simulate", "--out", str(out), "--config", str(cfg), "--set", "n=4"])
    assert rc == 0
    man = manifest_of(out)
    assert man["config"]["n"] == "4"
    assert man["master_seed"] == 3
    out2 = tmp_path / "out2"
    rc = main(["simulate", "--out", str(out2), "--config", str(cfg), "--seed", "11"])
    assert rc == 0
    assert manifest_of(out2)["master_seed"] == 11


# converge


def test_converge_rate_tiny(tmp_path):
    rc = main(
        ["converge", "--out", str(tmp_path), "--seed", "1", "--jobs", "1",
         "--set", "t=3.0", "--set", "h=0.1", "--set", "n=2",
         "--n-list", "2,4,8", "--replicates", "8"]
    )
    assert rc == 0
    fit = read_json(tmp_path, "rate_fit.json")
    assert fit["experiment"] == "rate"
    assert fit["n_list"] == [2, 4, 8]
    assert fit["replicates"] == 8
    assert fit["master_seed"] == 1
    assert fit["target_slope_window"] == [-0.65, -0.35]
    assert len(fit["mean_errors"]) == 3 and all(m > 0 for m in fit["mean_errors"])
    assert {"slope", "intercept", "r_squared", "std_errors", "wall_clock_seconds"} <= set(fit)
    curve = load_rate_curve(str(tmp_path / "rate_curve.csv"))
    assert [r.N for r in curve.rows] == [2, 4, 8]
    assert [r.mean_error for r in curve.rows] == fit["mean_errors"]
    man = manifest_of(tmp_path)
    assert man["command"] == "converge"
    assert man["outputs"] == ["rate_curve.csv", "rate_fit.json"]


def test_converge_marginal_tiny(tmp_path):
    rc = main(
        ["converge", "--out", str(tmp_path), "--seed", "2", "--jobs", "1",
         "--experiment", "marginal", "--set", "t=0.5", "--set", "limit_h=0.05",
         "--n-list", "2", "--replicates", "50"]
    )
    assert rc == 0
    summ = read_json(tmp_path, "marginal_summary.json")
    assert summ["experiment"] == "marginal"
    assert summ["n_list"] == [2]
    assert summ["times"] == [0.5]
    assert summ["replicates"] == 50
    assert len(summ["rows"]) == 1
    N, t, ks, w = summ["rows"][0]
    assert (N, t) == (2, 0.5) and 0.0 <= ks <= 1.0 and w >= 0.0
    assert len(summ["null_rows"]) == 1
    assert summ["band99"] > 0.0
    lines = (tmp_path / "marginal.csv").read_text().strip().split("\n")
    assert lines[0] == "N,t,ks,wasserstein" and len(lines) == 2


# phi


def test_phi_end_to_end(tmp_path):
    xp = tmp_path / "x.csv"
    wp = tmp_path / "w.csv"
    save_path(StepPath(1.0, (), 2.0), str(xp))
    save_window(PointMeasureWindow(2.0, 1.5, [(0.3, 0.4), (1.2, 0.9)]), str(wp))
    out = tmp_path / "out"
    rc = main(
        ["phi", "--out", str(out), "--path", str(xp), "--window", str(wp),
         "--horizon", "2.0", "--mark-bound", "1.5"]
    )
    assert rc == 0
    z = load_path(str(out / "counting_1.csv"))
    assert z.jump_times.tolist() == [0.3, 1.2]
    cond = read_json(out, "conditions.json")
    assert cond["all_ok"] is True
    assert {"condition_a", "condition_b", "condition_c", "condition_d"} <= set(cond)
    man = manifest_of(out)
    assert man["command"] == "phi"
    assert man["config"]["mark_bounds"] == [1.5]
    assert man["master_seed"] is None


def test_phi_mark_bound_broadcast_and_mismatch(tmp_path):
    xp, wp = tmp_path / "x.csv", tmp_path / "w.csv"
    save_path(StepPath(1.0, (), 2.0), str(xp))
    save_window(PointMeasureWindow(2.0, 1.0, [(0.5, 0.5)]), str(wp))
    out = tmp_path / "out"
    rc = main(
        ["phi", "--out", str(out), "--path", str(xp), "--path", str(xp),
         "--window", str(wp), "--window", str(wp),
         "--horizon", "2.0", "--mark-bound", "1.0"]
    )
    assert rc == 0
    assert (out / "counting_2.csv").exists()
    rc = main(
        ["phi", "--out", str(out), "--path", str(xp),
         "--window", str(wp), "--window", str(wp),
         "--horizon", "2.0", "--mark-bound", "1.0"]
    )
    assert rc == 1


# selftest


def test_selftest_quick(tmp_path, capsys):
    rc = main(["selftest", "--out", str(tmp_path), "--level", "quick"])
    assert rc == 0
    rep = read_json(tmp_path, "selftest.json")
    assert rep["level"] == "quick" and rep["passed"] is True and rep["n_failed"] == 0
    outlines = capsys.readouterr().out.strip().split("\n")
    assert all(line.startswith("PASS") for line in outlines[:-1])
    assert outlines[-1].startswith("selftest quick:")
    man = manifest_of(tmp_path)
    assert man["outputs"] == ["selftest.json"]


def test_selftest_failure_exit_code(tmp_path, monkeypatch):
    import ppthin.cli as cli
    from ppthin.selftest import CheckResult

    def fake_run(level):
        results = [CheckResult("broken", False, "forced")]
        report = {
            "level": level, "passed": False, "n_checks": 1, "n_failed": 1,
            "checks": [{"name": "broken", "passed": False, "detail": "forced"}],
            "elapsed_seconds": 0.0,
        }
        return results, report

    monkeypatch.setattr(cli.st, "run", fake_run)
    assert main(["selftest", "--out", str(tmp_path)]) == 3
    assert read_json(tmp_path, "selftest.json")["passed"] is False


# error paths


def test_exit_code_1_on_user_errors(tmp_path, capsys):
    cases = [
        ["simulate"],
        ["simulate", "--out", str(tmp_path), "--nope"],
        ["simulate", "--out", str(tmp_path), "--set", "noequals"],
        ["simulate", "--out", str(tmp_path), "--set", "model=banana"],
        ["simulate", "--out", str(tmp_path), "--set", "n=abc"],
        ["converge", "--out", str(tmp_path), "--n-list", "4,2", "--replicates", "2"],
        ["converge", "--out", str(tmp_path), "--set", "model=meanfield"],
        ["converge", "--out", str(tmp_path), "--experiment", "marginal",
         "--set", "model=hawkes"],
        ["frobnicate"],
    ]
    for argv in cases:
        assert main(argv) == 1, argv
        assert capsys.readouterr().err.startswith("error:")


def test_exit_code_2_on_model_error(tmp_path, capsys):
    rc = main(
        ["simulate", "--out", str(tmp_path), "--seed", "1",
         "--set", "model=volterra", "--set", "bound_ceiling=1.5"]
    )
    assert rc == 2
    assert capsys.readouterr().err.startswith("model error:")
