"""Command-line front end: seeded simulations, convergence studies, the
exact discontinuity example, file-based thinning, and the selftest suite.

Every run writes exactly one manifest.json next to its data files recording
the command, the effective configuration, the master seed, the package
version, the output file names, and wall-clock time.  Exit codes: 0 success,
1 validation or configuration error, 2 model runtime error, 3 selftest
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from . import config as cf
from . import diagnostics as dg
from . import models as md
from . import selftest as st
from .errors import ConfigError, ModelError, ValidationError
from .paths import GridPath, StepPath, load_path, save_path, uniform_distance
from .poisson import PointMeasureWindow, load_window, save_window
from .rng import RngStream
from .thinning import ThinningInput, check_conditions, phi

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through the package's
    # validation path instead so all user errors share exit code 1
    def error(self, message: str):
        raise ConfigError(message)


def _add_common(p: argparse.ArgumentParser, with_config: bool = True) -> None:
    p.add_argument("--out", required=True, help="output directory (created if missing)")
    if with_config:
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--seed", type=int, default=None, help="master seed (wins over config)")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override any config key; repeatable, wins over the file",
        )


def _build_parser() -> _Parser:
    p = _Parser(prog="ppthin", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="one seeded run of a configured model")
    _add_common(ps)
    ps.set_defaults(func=cmd_simulate)

    pc = sub.add_parser("converge", help="replicated convergence study")
    _add_common(pc)
    pc.add_argument("--n-list", default=None, help="comma-separated particle counts")
    pc.add_argument("--replicates", type=int, default=None)
    pc.add_argument("--experiment", choices=["rate", "marginal"], default=None)
    pc.add_argument(
        "--jobs",
        type=int,
        default=os.cpu_count() or 1,
        help="parallel workers for replicates (default: machine parallelism)",
    )
    pc.set_defaults(func=cmd_converge)

    px = sub.add_parser("counterexample", help="exact discontinuity example files")
    _add_common(px, with_config=False)
    px.set_defaults(func=cmd_counterexample)

    pt = sub.add_parser("selftest", help="run the built-in invariant suite")
    _add_common(pt, with_config=False)
    pt.add_argument("--level", choices=["quick", "full"], default="quick")
    pt.set_defaults(func=cmd_selftest)

    pp = sub.add_parser("phi", help="apply the thinning map to files")
    _add_common(pp, with_config=False)
    pp.add_argument(
        "--path", action="append", required=True, help="intensity path CSV; repeatable"
    )
    pp.add_argument(
        "--window", action="append", required=True, help="atom window CSV; repeatable"
    )
    pp.add_argument("--horizon", type=float, required=True)
    pp.add_argument(
        "--mark-bound",
        action="append",
        type=float,
        required=True,
        help="window mark bound; give one per window or a single shared value",
    )
    pp.set_defaults(func=cmd_phi)
    return p


def _merged_config(args: argparse.Namespace) -> dict[str, str]:
    d = cf.load_kv(args.config) if args.config else {}
    for item in args.set:
        kv = cf.parse_kv_text(item, "--set")
        d.update(kv)
    for flag, key in (("n_list", "n_list"), ("replicates", "replicates"), ("experiment", "experiment")):
        val = getattr(args, flag, None)
        if val is not None:
            d[key] = str(val)
    return d


def _effective_seed(args: argparse.Namespace, d: dict[str, str]) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    return cf.get_int(d, "seed", 0)


def _write_manifest(
    out_dir: str,
    command: str,
    config_echo: dict,
    master_seed: int | None,
    outputs: list[str],
    t0: float,
    extra: dict | None = None,
) -> None:
    man = {
        "command": command,
        "config": config_echo,
        "master_seed": master_seed,
        "version": __version__,
        "outputs": sorted(outputs),
        "wall_clock_seconds": round(time.time() - t0, 6),
    }
    if extra:
        man.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _save(obj, out_dir: str, name: str, outputs: list[str], kind: str = "path") -> None:
    full = os.path.join(out_dir, name)
    if kind == "path":
        save_path(obj, full)
    else:
        save_window(obj, full)
    outputs.append(name)


def cmd_simulate(args: argparse.Namespace) -> int:
    t0 = time.time()
    d = _merged_config(args)
    seed = _effective_seed(args, d)
    model = cf.get_choice(d, "model", ["meanfield", "volterra", "hawkes"], "meanfield")
    os.makedirs(args.out, exist_ok=True)
    outputs: list[str] = []
    window_meta: dict[str, dict[str, float]] = {}

    if model == "meanfield":
        c = cf.build_meanfield(d, RngStream(seed))
        out = md.simulate_meanfield_prelimit(c)
        _save(out.intensity_path, args.out, "intensity.csv", outputs)
        for i, z in enumerate(out.counting_paths, start=1):
            _save(z, args.out, f"counting_{i}.csv", outputs)
        n_events = out.diagnostics["n_events"]
    elif model == "volterra":
        c = cf.build_volterra(d, RngStream(seed))
        out = md.simulate_volterra_prelimit(c)
        _save(out.intensity_path, args.out, "intensity.csv", outputs)
        for i, z in enumerate(out.counting_paths, start=1):
            _save(z, args.out, f"counting_{i}.csv", outputs)
        for i, w in enumerate(out.windows_used, start=1):
            name = f"window_{i}.csv"
            _save(w, args.out, name, outputs, kind="window")
            window_meta[name] = {"horizon": w.horizon, "mark_bound": w.mark_bound}
        n_events = out.diagnostics["n_events"]
    else:
        c = cf.build_hawkes(d, RngStream(seed))
        co = md.simulate_hawkes_coupled(c)
        _save(co.prelimit.intensity_path, args.out, "prelimit_intensity.csv", outputs)
        _save(co.limit.intensity_path, args.out, "limit_intensity.csv", outputs)
        for i, z in enumerate(co.prelimit.counting_paths, start=1):
            _save(z, args.out, f"counting_prelimit_{i}.csv", outputs)
        for i, z in enumerate(co.limit.counting_paths, start=1):
            _save(z, args.out, f"counting_limit_{i}.csv", outputs)
        for i, w in enumerate(co.windows_used, start=1):
            name = f"window_{i}.csv"
            _save(w, args.out, name, outputs, kind="window")
            window_meta[name] = {"horizon": w.horizon, "mark_bound": w.mark_bound}
        n_events = co.prelimit.diagnostics["n_events"]

    _write_manifest(
        args.out, "simulate", dict(d), seed, outputs, t0,
        extra={"model": model, "windows": window_meta},
    )
    print(f"simulate model={model} seed={seed}: {n_events} events, {len(outputs)} files -> {args.out}")
    return 0


def cmd_converge(args: argparse.Namespace) -> int:
    t0 = time.time()
    d = _merged_config(args)
    seed = _effective_seed(args, d)
    experiment = cf.get_choice(d, "experiment", ["rate", "marginal"], "rate")
    os.makedirs(args.out, exist_ok=True)
    outputs: list[str] = []

    if experiment == "rate":
        model = cf.get_choice(d, "model", ["meanfield", "volterra", "hawkes"], "hawkes")
        if model != "hawkes":
            raise ConfigError("experiment=rate measures the coupled system; set model=hawkes")
        c = cf.build_hawkes(d, RngStream(seed))
        n_list = cf.get_int_list(d, "n_list", [8, 16, 32, 64, 128, 256, 512])
        replicates = cf.get_int(d, "replicates", 200)
        curve = dg.coupling_error_curve(c, n_list, replicates, jobs=args.jobs)
        fit = dg.fit_rate(curve)
        dg.save_rate_curve(curve, os.path.join(args.out, "rate_curve.csv"))
        outputs.append("rate_curve.csv")
        summary = {
            "experiment": "rate",
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "target_slope_window": [-0.65, -0.35],
            "n_list": n_list,
            "replicates": replicates,
            "master_seed": seed,
            "mean_errors": [r.mean_error for r in curve.rows],
            "std_errors": [r.std_error for r in curve.rows],
            "wall_clock_seconds": round(time.time() - t0, 6),
        }
        with open(os.path.join(args.out, "rate_fit.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append("rate_fit.json")
        _write_manifest(args.out, "converge", dict(d), seed, outputs, t0)
        print(f"converge rate: slope={fit.slope:.4f} r2={fit.r_squared:.3f} over N={n_list}")
        return 0

    model = cf.get_choice(d, "model", ["meanfield", "volterra", "hawkes"], "meanfield")
    if model != "meanfield":
        raise ConfigError("experiment=marginal compares diffusive marginals; set model=meanfield")
    c = cf.build_meanfield(d, RngStream(seed))
    n_list = cf.get_int_list(d, "n_list", [4, 16, 64, 256])
    replicates = cf.get_int(d, "replicates", 500)
    times = cf.get_float_list(d, "times", [c.T])
    limit_h = cf.get_float(d, "limit_h", 0.01)
    rep = dg.marginal_report(c, n_list, times, replicates, limit_h=limit_h, jobs=args.jobs)
    dg.save_marginal_report(rep, os.path.join(args.out, "marginal.csv"))
    outputs.append("marginal.csv")
    summary = {
        "experiment": "marginal",
        "rows": [list(r) for r in rep.rows],
        "null_rows": [list(r) for r in rep.null_rows],
        "band99": rep.band99,
        "n_list": n_list,
        "times": times,
        "replicates": replicates,
        "limit_h": limit_h,
        "master_seed": seed,
        "wall_clock_seconds": round(time.time() - t0, 6),
    }
    with open(os.path.join(args.out, "marginal_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append("marginal_summary.json")
    _write_manifest(args.out, "converge", dict(d), seed, outputs, t0)
    largest = [r for r in rep.rows if r[0] == max(n_list)]
    line = " ".join(f"ks(t={r[1]:g})={r[2]:.4f}" for r in largest)
    print(f"converge marginal: N={max(n_list)} {line} band99={rep.band99:.4f}")
    return 0


def cmd_counterexample(args: argparse.Namespace) -> int:
    t0 = time.time()
    os.makedirs(args.out, exist_ok=True)
    outputs: list[str] = []
    horizon = 2.0
    x = StepPath(1.0, (), horizon)
    w = PointMeasureWindow(horizon, 1.0, [(1.0, 1.0)])
    zx = phi(ThinningInput([x], [w], horizon))[0]
    rep = check_conditions(ThinningInput([x], [w], horizon))
    _save(x, args.out, "x.csv", outputs)
    _save(zx, args.out, "phi_x.csv", outputs)
    _save(w, args.out, "pi.csv", outputs, kind="window")
    phi_xn: dict[str, dict[str, float]] = {}
    h = 1.0 / 16.0
    t_left = np.arange(32) * h
    for n in (1, 2, 4, 8, 16):
        vals = 1.0 - (1.0 / n) * np.maximum(0.0, 1.0 - 2.0 * np.abs(t_left - 1.0))
        xn = GridPath(h, vals, horizon)
        zn = phi(ThinningInput([xn], [w], horizon))[0]
        _save(xn, args.out, f"xn_{n}.csv", outputs)
        _save(zn, args.out, f"phi_xn_{n}.csv", outputs)
        phi_xn[str(n)] = {
            "jump_count": int(zn.jump_times.size),
            "sup_distance": float(uniform_distance(x, xn)),
        }
    report = {
        "phi_x": {"jump_times": zx.jump_times.tolist(), "jump_count": int(zx.jump_times.size)},
        "phi_xn": phi_xn,
        "conditions": {
            "a": rep.condition_a,
            "b": rep.condition_b,
            "c": rep.condition_c,
            "d": rep.condition_d,
        },
        "violations_d": [list(v) for v in rep.violations_d],
    }
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append("report.json")
    _write_manifest(
        args.out, "counterexample", {"horizon": horizon, "n_values": [1, 2, 4, 8, 16]},
        None, outputs, t0,
        extra={"windows": {"pi.csv": {"horizon": horizon, "mark_bound": 1.0}}},
    )
    print(
        f"counterexample: phi(x) jumps at {zx.jump_times.tolist()}, "
        f"phi(xn) empty for all n, condition d={rep.condition_d}"
    )
    return 0


def cmd_selftest(args: argparse.Namespace) -> int:
    t0 = time.time()
    results, report = st.run(args.level)
    os.makedirs(args.out, exist_ok=True)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    with open(os.path.join(args.out, "selftest.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(args.out, "selftest", {"level": args.level}, None, ["selftest.json"], t0)
    print(
        f"selftest {args.level}: {report['n_checks'] - report['n_failed']}/{report['n_checks']} "
        f"passed in {report['elapsed_seconds']}s"
    )
    return 0 if report["passed"] else 3


def cmd_phi(args: argparse.Namespace) -> int:
    t0 = time.time()
    if len(args.mark_bound) == 1:
        bounds = args.mark_bound * len(args.window)
    elif len(args.mark_bound) == len(args.window):
        bounds = args.mark_bound
    else:
        raise ConfigError("--mark-bound count must be 1 or match the window count")
    if len(args.path) != len(args.window):
        raise ConfigError("need exactly one --window per --path")
    paths = [load_path(p) for p in args.path]
    windows = [load_window(wp, args.horizon, b) for wp, b in zip(args.window, bounds)]
    inp = ThinningInput(paths, windows, args.horizon)
    rep = check_conditions(inp)
    z = phi(inp)
    os.makedirs(args.out, exist_ok=True)
    outputs: list[str] = []
    for i, zp in enumerate(z, start=1):
        _save(zp, args.out, f"counting_{i}.csv", outputs)
    with open(os.path.join(args.out, "conditions.json"), "w") as fh:
        json.dump(rep.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append("conditions.json")
    echo = {
        "paths": [os.path.basename(p) for p in args.path],
        "windows": [os.path.basename(p) for p in args.window],
        "horizon": args.horizon,
        "mark_bounds": bounds,
    }
    _write_manifest(args.out, "phi", echo, None, outputs, t0)
    counts = [int(zp.jump_times.size) for zp in z]
    print(f"phi: jump counts {counts}, conditions all_ok={rep.all_ok}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
