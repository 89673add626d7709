"""Built-in invariant suite, runnable at two scales.

`run("quick")` keeps every check cheap (whole suite well under 30 s);
`run("full")` raises replicate counts and case counts to evidence scale
(under 10 min).  Each check is deterministic, owns fixed stream ids, and
reports one named line; oracles here are written independently of the
library internals they check (naive per-atom thinning loop, factorial
matching search, closed-form integrals).
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import diagnostics as dg
from . import models as md
from .errors import DegenerateFitError, ValidationError
from .paths import (
    GridPath,
    PathVector,
    StepPath,
    TimeChange,
    load_path,
    save_path,
    skorohod_upper_distance,
    sup_norm,
    uniform_distance,
)
from .poisson import (
    PointMeasureWindow,
    Rectangle,
    count,
    extend_window,
    is_simple,
    load_window,
    match_atoms,
    restrict,
    sample_window,
    save_window,
)
from .rng import RngStream
from .thinning import ThinningInput, check_conditions, phi

__all__ = ["CheckResult", "run"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


QUICK = {
    "windows": 2000,
    "count_tol_mean": 0.25,
    "count_tol_var": 1.0,
    "corr_tol": 0.08,
    "match_cases": 60,
    "phi_cases": 200,
    "mf_reps": 200,
    "mf_tol": 0.03,
    "solver_h": 2e-3,
    "solver_tol": 1e-2,
    "rate_reps": 30,
    "null_reps": 200,
    "vol_reps": 40,
    "mc_paths": 2000,
    "median_reps": 0,
}

FULL = {
    "windows": 10000,
    "count_tol_mean": 0.10,
    "count_tol_var": 0.35,
    "corr_tol": 0.04,
    "match_cases": 300,
    "phi_cases": 1000,
    "mf_reps": 500,
    "mf_tol": 0.015,
    "solver_h": 1e-3,
    "solver_tol": 5e-3,
    "rate_reps": 100,
    "null_reps": 500,
    "vol_reps": 120,
    "mc_paths": 10000,
    "median_reps": 50,
}


# ---------------------------------------------------------------------------
# independent oracles


def _naive_left_value(x, t: float) -> float:
    """Left limit by direct definition, no searchsorted: value at t=0, else x(t-)."""
    if isinstance(x, GridPath):
        if t == 0.0:
            return float(x.values[0])
        k = 0
        while (k + 1) * x.h < t and k + 1 < x.values.size:
            k += 1
        return float(x.values[k])
    if t == 0.0:
        return float(x.initial_value)
    val = x.initial_value
    for jt, jv in zip(x.jump_times, x.jump_values):
        if jt < t:
            val = jv
        else:
            break
    return float(val)


def _naive_phi(x, w: PointMeasureWindow, horizon: float) -> np.ndarray:
    accepted = []
    for t, z in zip(w.times, w.marks):
        if t > horizon:
            continue
        if z <= _naive_left_value(x, t):
            accepted.append(t)
    return np.asarray(accepted)


def _brute_match(a: PointMeasureWindow, b: PointMeasureWindow):
    n = len(a)
    best_cost = math.inf
    best_perm = None
    for perm in itertools.permutations(range(n)):
        cost = 0.0
        for i, j in enumerate(perm):
            cost = max(
                cost,
                max(abs(a.times[i] - b.times[j]), abs(a.marks[i] - b.marks[j])),
            )
        if cost < best_cost or (cost == best_cost and perm < best_perm):
            best_cost = cost
            best_perm = perm
    return best_perm, best_cost


def _random_grid_path(gen, horizon: float) -> GridPath:
    n = int(gen.integers(1, 12))
    h = horizon / n * float(gen.uniform(0.9, 1.4))
    n_cells = int(np.ceil(horizon / h - 1e-9))
    vals = gen.uniform(0.0, 3.0, size=n_cells)
    return GridPath(h, vals, horizon)


def _random_step_path(gen, horizon: float) -> StepPath:
    n = int(gen.integers(0, 8))
    times = np.sort(gen.uniform(0.0, horizon, size=n))
    times = np.unique(times)
    times = times[times > 0]
    vals = gen.uniform(0.0, 3.0, size=times.size)
    return StepPath.from_arrays(float(gen.uniform(0.0, 3.0)), times, vals, horizon)


# ---------------------------------------------------------------------------
# checks: poisson windows


def check_window_moments(s) -> CheckResult:
    R = s["windows"]
    counts = np.empty(R)
    simple = True
    c1 = np.empty(R)
    c2 = np.empty(R)
    for r in range(R):
        w = sample_window(2.0, 3.0, False, RngStream(101, r))
        counts[r] = len(w)
        simple &= is_simple(w)
        c1[r] = count(w, Rectangle(0.0, 1.0, 0.0, 3.0))
        c2[r] = count(w, Rectangle(1.0, 2.0, 0.0, 3.0))
    mean_err = abs(counts.mean() - 6.0)
    var_err = abs(counts.var(ddof=1) - 6.0)
    corr = float(np.corrcoef(c1, c2)[0, 1])
    ok = (
        mean_err <= s["count_tol_mean"]
        and var_err <= s["count_tol_var"]
        and simple
        and abs(corr) <= s["corr_tol"]
    )
    return CheckResult(
        "window_moments",
        ok,
        f"|mean-6|={mean_err:.3f} |var-6|={var_err:.3f} corr={corr:.4f} simple={simple}",
    )


def check_window_uniformity(s) -> CheckResult:
    w = sample_window(200.0, 3.0, False, RngStream(102))
    n = len(w)
    # times/T and marks/M should each be U[0,1]; one-sample exact KS
    band = 1.63 / math.sqrt(n)
    ds = []
    for vals, scale in ((w.times, 200.0), (w.marks, 3.0)):
        u = np.sort(vals / scale)
        k = np.arange(1, n + 1)
        d = float(max(np.max(k / n - u), np.max(u - (k - 1) / n)))
        ds.append(d)
    ok = all(d <= band for d in ds)
    return CheckResult(
        "window_uniformity", ok, f"ks_times={ds[0]:.4f} ks_marks={ds[1]:.4f} band={band:.4f}"
    )


def check_window_determinism(s) -> CheckResult:
    a = sample_window(2.0, 3.0, True, RngStream(103, 5))
    b = sample_window(2.0, 3.0, True, RngStream(103, 5))
    c = sample_window(2.0, 3.0, True, RngStream(103, 6))
    ok = a == b and not (a == c)
    return CheckResult("window_determinism", ok, f"equal={a == b} distinct={not (a == c)}")


def check_window_extension(s) -> CheckResult:
    w = sample_window(2.0, 1.5, False, RngStream(104))
    we = extend_window(w, 3.0, RngStream(104, 1))
    old = set(zip(w.times.tolist(), w.marks.tolist()))
    new = set(zip(we.times.tolist(), we.marks.tolist()))
    kept = old <= new
    below = count(we, Rectangle(0.0, 2.0, 0.0, 1.5)) == len(w)
    strictly_above = all(z > 1.5 for t, z in new - old)
    ok = kept and below and strictly_above and is_simple(we)
    return CheckResult(
        "window_extension", ok, f"kept={kept} below={below} strip_above={strictly_above}"
    )


def check_window_restrict(s) -> CheckResult:
    w = sample_window(2.0, 3.0, False, RngStream(105))
    r = restrict(w, 1.0, 2.0)
    mask = (w.times < 1.0) & (w.marks <= 2.0)
    ok = np.array_equal(r.times, w.times[mask]) and np.array_equal(r.marks, w.marks[mask])
    return CheckResult("window_restrict", ok, f"kept {len(r)} of {len(w)}")


def check_window_roundtrip(s) -> CheckResult:
    import tempfile, os

    ok = True
    detail = []
    with tempfile.TemporaryDirectory() as td:
        for marked in (False, True):
            w = sample_window(2.0, 3.0, marked, RngStream(106, int(marked)))
            p = os.path.join(td, f"w{marked}.csv")
            save_window(w, p)
            w2 = load_window(p, 2.0, 3.0)
            ok &= w == w2
            detail.append(f"marked={marked} equal={w == w2}")
    return CheckResult("window_csv_roundtrip", ok, "; ".join(detail))


def check_matching_oracle(s) -> CheckResult:
    gen = RngStream(107).generator()
    bad = 0
    for case in range(s["match_cases"]):
        n = int(gen.integers(1, 7))
        ta = np.sort(gen.uniform(0, 1, n))
        tb = np.sort(gen.uniform(0, 1, n))
        wa = PointMeasureWindow.from_arrays(1.0, 1.0, ta, gen.uniform(0, 1, n))
        wb = PointMeasureWindow.from_arrays(1.0, 1.0, tb, gen.uniform(0, 1, n))
        m = match_atoms(wa, wb)
        perm, cost = _brute_match(wa, wb)
        if m.permutation != perm or abs(m.max_displacement - cost) > 1e-12:
            bad += 1
    iden = match_atoms(wa, wa)
    ok = bad == 0 and iden.permutation == tuple(range(len(wa))) and iden.max_displacement == 0.0
    return CheckResult("matching_oracle", ok, f"{s['match_cases']} cases, {bad} mismatches")


# ---------------------------------------------------------------------------
# checks: paths


def check_path_eval(s) -> CheckResult:
    g = GridPath(0.5, [0.0, 2.0, 4.0], 1.5)
    p = StepPath(1.0, [(0.5, 2.0), (1.0, 3.0)], 2.0)
    cases = [
        g.eval(0.0) == 0.0,
        g.eval(1.0) == 4.0,
        g.eval_left(1.0) == 2.0,
        g.eval(1.5) == 4.0,
        g.eval_left(0.25) == 0.0,
        p.eval(0.5) == 2.0,
        p.eval_left(0.5) == 1.0,
        p.eval(2.0) == 3.0,
        p.eval_left(1.0) == 2.0,
    ]
    return CheckResult("path_eval", all(cases), f"{sum(cases)}/{len(cases)} pinned evals")


def check_path_metrics(s) -> CheckResult:
    p = StepPath(0.0, [(1.0, 1.0)], 2.0)
    q = StepPath(0.0, (), 2.0)
    ok = sup_norm(p) == 1.0 and uniform_distance(p, q) == 1.0 and uniform_distance(p, p) == 0.0
    g = GridPath(0.5, [0.0, 1.0, -3.0, 1.0], 2.0)
    ok &= sup_norm(g) == 3.0 and sup_norm(g, upto=0.75) == 1.0
    return CheckResult("path_metrics", ok, "sup_norm and uniform_distance pinned values")


def check_skorohod(s) -> CheckResult:
    g1 = PathVector([StepPath(0.0, [(1.0, 1.0)], 2.0)])
    g2 = PathVector([StepPath(0.0, [(1.1, 1.0)], 2.0)])
    d, lam = skorohod_upper_distance(g1, g2)
    d0, _ = skorohod_upper_distance(g1, g1)
    d_sym, _ = skorohod_upper_distance(g2, g1)
    gen = RngStream(108).generator()
    mono_ok = True
    exercised = 0
    for case in range(40):
        base = _random_step_path(gen, 2.0)
        keep = (base.jump_times > 0.2) & (base.jump_times < 1.8)
        times = base.jump_times[keep]
        if times.size == 0 or np.any(np.diff(times) < 0.25):
            continue
        vals = base.jump_values[keep]
        base = StepPath.from_arrays(base.initial_value, times, vals, 2.0)
        pert = gen.uniform(-1, 1, times.size)
        prev = math.inf
        for delta in (0.1, 0.01, 0.001):
            moved = StepPath.from_arrays(base.initial_value, times + delta * pert, vals, 2.0)
            dd, _ = skorohod_upper_distance(PathVector([base]), PathVector([moved]))
            if dd > delta + 1e-12 or dd > prev + 1e-12:
                mono_ok = False
            prev = dd
        exercised += 1
    ok = (
        abs(d - 0.1) < 1e-12
        and d0 == 0.0
        and abs(d - d_sym) < 1e-12
        and mono_ok
        and exercised >= 5
    )
    return CheckResult(
        "skorohod_upper", ok, f"shift d={d:.4f} self={d0} monotone over {exercised} cases"
    )


def check_time_change(s) -> CheckResult:
    lam = TimeChange([(0.0, 0.0), (0.5, 0.6), (2.0, 2.0)])
    inv = lam.inverse()
    pts = np.linspace(0.0, 2.0, 9)
    round_trip = np.max(np.abs(inv(lam(pts)) - pts))
    ident = TimeChange.identity(2.0)
    ok = round_trip < 1e-12 and ident.sup_deviation() == 0.0 and abs(lam.sup_deviation() - 0.1) < 1e-12
    return CheckResult("time_change", ok, f"roundtrip={round_trip:.2e}")


def check_path_roundtrip(s) -> CheckResult:
    import tempfile, os

    gen = RngStream(109).generator()
    ok = True
    with tempfile.TemporaryDirectory() as td:
        for i in range(10):
            p = _random_step_path(gen, 2.0)
            fp = os.path.join(td, f"s{i}.csv")
            save_path(p, fp)
            ok &= load_path(fp) == p
            g = _random_grid_path(gen, 2.0)
            fg = os.path.join(td, f"g{i}.csv")
            save_path(g, fg)
            ok &= load_path(fg) == g
    return CheckResult("path_csv_roundtrip", ok, "20 random paths")


# ---------------------------------------------------------------------------
# checks: thinning


def check_phi_oracle(s) -> CheckResult:
    gen = RngStream(110).generator()
    bad = 0
    for case in range(s["phi_cases"]):
        horizon = float(gen.uniform(0.5, 3.0))
        x = _random_grid_path(gen, horizon) if case % 2 == 0 else _random_step_path(gen, horizon)
        bound = max(3.5, float(gen.uniform(3.5, 5.0)))
        w = sample_window(horizon, bound, False, RngStream(110, case))
        out = phi(ThinningInput([x], [w], horizon))[0]
        naive = _naive_phi(x, w, horizon)
        if not np.array_equal(out.jump_times, naive):
            bad += 1
    return CheckResult("phi_naive_oracle", bad == 0, f"{s['phi_cases']} cases, {bad} mismatches")


def check_phi_boundary(s) -> CheckResult:
    # atom mark exactly equal to the intensity left limit must be accepted;
    # a < mutation in the acceptance rule fails here deterministically
    x = StepPath(2.0, [(0.5, 1.0)], 2.0)
    w = PointMeasureWindow(2.0, 2.0, [(0.5, 2.0), (0.7, 1.0), (1.5, 1.5)])
    z = phi(ThinningInput([x], [w], 2.0))[0]
    got = z.jump_times.tolist()
    ok = got == [0.5, 0.7]
    rep = check_conditions(ThinningInput([x], [w], 2.0))
    ok &= (not rep.condition_d) and len(rep.violations_d) == 2
    g = GridPath(0.5, [1.0, 0.5, 0.5, 1.5], 2.0)
    wg = PointMeasureWindow(2.0, 2.0, [(0.5, 1.0), (1.7, 2.0)])
    zg = phi(ThinningInput([g], [wg], 2.0))[0]
    ok &= zg.jump_times.tolist() == [0.5]
    return CheckResult("phi_boundary_closed", ok, f"accepted={got}, grid boundary uses left cell")


def check_phi_monotone(s) -> CheckResult:
    gen = RngStream(111).generator()
    ok = True
    for case in range(30):
        horizon = 2.0
        x = _random_grid_path(gen, horizon)
        hi = GridPath(x.h, x.values + 0.5, horizon)
        w = sample_window(horizon, 4.0, False, RngStream(111, case))
        lo_t = set(phi(ThinningInput([x], [w], horizon))[0].jump_times.tolist())
        hi_t = set(phi(ThinningInput([hi], [w], horizon))[0].jump_times.tolist())
        ok &= lo_t <= hi_t
    return CheckResult("phi_monotone", ok, "raising intensity only adds atoms")


def check_phi_restriction(s) -> CheckResult:
    gen = RngStream(112).generator()
    ok = True
    for case in range(30):
        x = _random_grid_path(gen, 2.0)
        w = sample_window(2.0, 4.0, False, RngStream(112, case))
        full = phi(ThinningInput([x], [w], 2.0))[0]
        half = phi(ThinningInput([x], [w], 1.0))[0]
        ok &= full.restricted(1.0) == half
    return CheckResult("phi_restriction", ok, "phi commutes with horizon restriction")


def check_phi_superposition(s) -> CheckResult:
    # bound B vs extended 2B: decisions below B never change
    gen = RngStream(113).generator()
    ok = True
    for case in range(20):
        x = _random_grid_path(gen, 2.0)
        x = GridPath(x.h, np.minimum(x.values, 1.4), 2.0)
        w = sample_window(2.0, 1.5, False, RngStream(113, case))
        we = extend_window(w, 3.0, RngStream(113, 1000 + case))
        a = phi(ThinningInput([x], [w], 2.0))[0]
        b = phi(ThinningInput([x], [we], 2.0))[0]
        ok &= a == b
    return CheckResult("phi_superposition", ok, "extension leaves decisions unchanged")


def check_conditions_detect(s) -> CheckResult:
    x = StepPath(1.0, (), 2.0)
    # (b): shared atom time across measures
    w1 = PointMeasureWindow(2.0, 1.0, [(0.5, 0.2)])
    w2 = PointMeasureWindow(2.0, 1.0, [(0.5, 0.3)])
    rep_b = check_conditions(ThinningInput([x, x], [w1, w2], 2.0))
    # (c): atom at an intensity discontinuity
    xc = StepPath(1.0, [(0.5, 0.8)], 2.0)
    rep_c = check_conditions(ThinningInput([xc], [w1], 2.0))
    # (d): mark equals left value
    wd = PointMeasureWindow(2.0, 1.0, [(0.7, 1.0)])
    rep_d = check_conditions(ThinningInput([x], [wd], 2.0))
    # clean input
    w_ok = PointMeasureWindow(2.0, 1.0, [(0.3, 0.5), (1.1, 0.9)])
    rep_ok = check_conditions(ThinningInput([x], [w_ok], 2.0))
    ok = (
        not rep_b.condition_b
        and rep_b.condition_a
        and not rep_c.condition_c
        and not rep_d.condition_d
        and rep_ok.all_ok
    )
    return CheckResult("conditions_detect", ok, "each condition flags its violation")


def check_counterexample(s) -> CheckResult:
    x = StepPath(1.0, (), 2.0)
    w = PointMeasureWindow(2.0, 1.0, [(1.0, 1.0)])
    z = phi(ThinningInput([x], [w], 2.0))[0]
    ok = z.jump_times.tolist() == [1.0]
    dips = []
    for n in (1, 2, 4, 8, 16):
        h = 1.0 / 16.0
        t_left = np.arange(32) * h
        vals = 1.0 - (1.0 / n) * np.maximum(0.0, 1.0 - 2.0 * np.abs(t_left - 1.0))
        xn = GridPath(h, vals, 2.0)
        zn = phi(ThinningInput([xn], [w], 2.0))[0]
        ok &= zn.jump_times.size == 0
        dips.append(abs(uniform_distance(x, xn) - 1.0 / n) < 1e-15)
    ok &= all(dips)
    rep = check_conditions(ThinningInput([x], [w], 2.0))
    ok &= not rep.condition_d
    return CheckResult("counterexample_exact", ok, "jump at 1 for x, none for tents, (d) violated")


# ---------------------------------------------------------------------------
# checks: models


def check_solver_closed_forms(s) -> CheckResult:
    h = s["solver_h"]
    K = md.ExponentialKernel(1.0)
    g1 = md.solve_volterra_deterministic(K, md.ConstRate(1.0), 5.0, h)
    t1 = np.arange(g1.values.size) * g1.h
    e1 = float(np.max(np.abs(g1.values - (1.0 - np.exp(-t1)))))
    g2 = md.solve_volterra_deterministic(K, md.AffineRate(1.0, 0.5), 5.0, h)
    e2 = float(np.max(np.abs(g2.values - 2.0 * (1.0 - np.exp(-t1 / 2.0)))))
    gh = md.solve_volterra_deterministic(K, md.ConstRate(1.0), 5.0, h / 2.0)
    th = np.arange(gh.values.size) * gh.h
    eh = float(np.max(np.abs(gh.values - (1.0 - np.exp(-th)))))
    ratio = e1 / eh
    gz = md.solve_volterra_deterministic(K, md.ConstRate(0.0), 5.0, 0.01)
    ok = (
        e1 <= s["solver_tol"]
        and e2 <= s["solver_tol"]
        and 1.5 <= ratio <= 2.5
        and np.all(gz.values == 0.0)
    )
    return CheckResult(
        "solver_closed_forms", ok, f"err1={e1:.2e} err2={e2:.2e} halving_ratio={ratio:.2f}"
    )


def check_meanfield_small_mean(s) -> CheckResult:
    R = s["mf_reps"]
    tot = 0.0
    for r in range(R):
        c = md.MeanFieldDiffusiveConfig(alpha=1.0, N=100, T=0.1, n_obs=1, seed=RngStream(23, r))
        tot += simulate_count(c)
    mean = tot / R
    ok = abs(mean - 0.100) <= s["mf_tol"]
    return CheckResult("meanfield_small_mean", ok, f"mean={mean:.4f} tol={s['mf_tol']}")


def simulate_count(c) -> float:
    out = md.simulate_meanfield_prelimit(c)
    return float(out.counting_paths[0].jump_times.size)


def check_meanfield_energy(s) -> CheckResult:
    c = md.MeanFieldDiffusiveConfig(alpha=1.0, N=50, T=1.0, n_obs=1, seed=RngStream(114))
    out = md.simulate_meanfield_prelimit(c)
    r = out.diagnostics["replay"]
    du = r["event_x_after"] - r["event_x_before"]
    ok = np.allclose(du * math.sqrt(50), r["event_u"], rtol=0, atol=1e-12)
    ok &= md.reverify(out)
    return CheckResult("meanfield_energy_replay", bool(ok), f"{r['event_u'].size} events replayed")


def check_meanfield_t0(s) -> CheckResult:
    c = md.MeanFieldDiffusiveConfig(alpha=1.0, N=10, T=0.0, n_obs=2, seed=RngStream(115))
    out = md.simulate_meanfield_prelimit(c)
    ok = (
        len(out.counting_paths) == 2
        and all(p.jump_times.size == 0 for p in out.counting_paths)
        and sup_norm(out.intensity_path) == 0.0
    )
    return CheckResult("meanfield_t0", ok, "empty outputs at T=0")


def check_euler_zero_noise(s) -> CheckResult:
    x = md._euler_meanfield(1.0, 0.01, np.zeros((3, 99)))
    kv = np.concatenate([[0.0], md.PowerKernel(1.0)(np.arange(1, 100) * 0.01)])
    xv = md._euler_volterra(kv, np.zeros((3, 98)), 1.0)
    ok = np.all(x == 0.0) and np.all(xv == 0.0)
    return CheckResult("euler_zero_noise", bool(ok), "zero increments give the zero path")


def check_meanfield_limit_stats(s) -> CheckResult:
    P = s["mc_paths"]
    gen = RngStream(116).generator()
    n = 100
    dw = gen.standard_normal((P, n - 1)) * math.sqrt(0.01)
    x = md._euler_meanfield(1.0, 0.01, dw)
    final = x[:, -1]
    se = final.std(ddof=1) / math.sqrt(P)
    ok = abs(final.mean()) <= 4 * se
    # weak refinement: E[X_1^2] at h vs h/2 within 4 combined SE
    dw2 = gen.standard_normal((P, 2 * n - 1)) * math.sqrt(0.005)
    x2 = md._euler_meanfield(1.0, 0.005, dw2)
    a, b = x[:, -1] ** 2, x2[:, -1] ** 2
    comb = math.sqrt(a.var(ddof=1) / P + b.var(ddof=1) / P)
    ok &= abs(a.mean() - b.mean()) <= 4 * comb
    return CheckResult(
        "meanfield_limit_stats", bool(ok), f"mean={final.mean():.4f} (4se={4*se:.4f})"
    )


def check_meanfield_limit_reverify(s) -> CheckResult:
    out = md.simulate_meanfield_limit(1.0, 2.0, 0.01, RngStream(117), n_obs=2)
    ok = md.reverify(out)
    rate = out.diagnostics["rate_path"]
    ok &= np.array_equal(rate.values, 1.0 + out.intensity_path.values ** 2)
    return CheckResult("meanfield_limit_reverify", bool(ok), "phi reproduces counting paths")


def check_volterra_degenerate(s) -> CheckResult:
    c = md.VolterraConfig(gamma=1.0, N=4, T=1.0, h=0.05, mu=0.0, seed=RngStream(118))
    out = md.simulate_volterra_prelimit(c)
    ok = out.diagnostics["n_events"] == 0 and np.all(out.intensity_path.values == 0.0)
    return CheckResult("volterra_mu0_degenerate", bool(ok), "zero intensity stays absorbed")


def check_volterra_single_atom(s) -> CheckResult:
    # find a run with exactly one event; gamma=1 makes its jump part (t-s)/N
    for r in range(200):
        c = md.VolterraConfig(gamma=1.0, N=4, T=0.5, h=0.05, mu=0.35, seed=RngStream(119, r))
        out = md.simulate_volterra_prelimit(c)
        if out.diagnostics["n_events"] == 1:
            break
    else:
        return CheckResult("volterra_single_atom", False, "no single-event run found")
    sev = out.counting_paths[0].jump_times[0]
    lam = out.diagnostics["prelimit_intensity"]
    xs = out.diagnostics["prelimit_state"]
    n = lam.values.size
    kv = np.concatenate([[0.0], md.PowerKernel(1.0)(np.arange(1, n + 1) * c.h / c.N)])
    ok = True
    for k in range(1, n):
        tk = k * c.h
        jump = (tk - sev) / c.N if sev < tk else 0.0
        comp = c.h * float(np.dot(lam.values[:k], kv[k:0:-1]))
        if abs(xs.values[k] - (jump - comp)) > 1e-12:
            ok = False
            break
    resc = out.intensity_path
    ok &= np.array_equal(resc.values, xs.values / c.N)
    return CheckResult(
        "volterra_single_atom", bool(ok), f"event at {sev:.3f}, jump part is (t-s)/N exactly"
    )


def check_volterra_compensator(s) -> CheckResult:
    R = s["vol_reps"]
    mu = 0.8
    counts = np.empty(R)
    for r in range(R):
        c = md.VolterraConfig(
            gamma=1.0, N=8, T=1.0, h=0.02, mu=mu, seed=RngStream(120, r), freeze_feedback=True
        )
        out = md.simulate_volterra_prelimit(c)
        counts[r] = out.diagnostics["n_events"]
    span = 8.0
    expect = mu * span
    se = counts.std(ddof=1) / math.sqrt(R)
    ok = abs(counts.mean() - expect) <= 4 * se
    return CheckResult(
        "volterra_compensator", bool(ok), f"mean={counts.mean():.3f} expect={expect} 4se={4*se:.3f}"
    )


def check_volterra_reverify(s) -> CheckResult:
    c = md.VolterraConfig(gamma=0.5, N=4, T=1.0, h=0.02, mu=1.0, seed=RngStream(121))
    out = md.simulate_volterra_prelimit(c)
    ok = md.reverify(out)
    return CheckResult("volterra_reverify", bool(ok), f"{out.diagnostics['n_events']} events")


def check_volterra_limit_stats(s) -> CheckResult:
    P = s["mc_paths"]
    gen = RngStream(122).generator()
    n = 50
    kv = np.concatenate([[0.0], md.PowerKernel(1.0)(np.arange(1, n + 1) * 0.02)])
    db = gen.standard_normal((P, n - 1)) * math.sqrt(0.02)
    x = md._euler_volterra(kv, db, 1.0)
    mid, fin = x[:, n // 2], x[:, -1]
    se = fin.std(ddof=1) / math.sqrt(P)
    ok = abs(fin.mean()) <= 4 * se and fin.var(ddof=1) > mid.var(ddof=1)
    return CheckResult(
        "volterra_limit_stats",
        bool(ok),
        f"mean={fin.mean():.4f} var(T)={fin.var():.4f} > var(T/2)={mid.var():.4f}",
    )


def check_hawkes_collapse(s) -> CheckResult:
    ok = True
    for N in (4, 32):
        c = md.HawkesMeanFieldConfig(
            kernel=md.ExponentialKernel(1.0),
            rate_fn=md.ConstRate(1.0),
            N=N,
            T=2.0,
            h=0.05,
            n_obs=2,
            seed=RngStream(123, N),
        )
        co = md.simulate_hawkes_coupled(c)
        for a, b in zip(co.prelimit.counting_paths, co.limit.counting_paths):
            ok &= a == b
    return CheckResult("hawkes_const_collapse", bool(ok), "Z == Z-bar for constant f")


def check_hawkes_reverify(s) -> CheckResult:
    c = md.HawkesMeanFieldConfig(
        kernel=md.ExponentialKernel(1.0),
        rate_fn=md.AffineRate(1.0, 0.5),
        N=32,
        T=3.0,
        h=0.05,
        n_obs=2,
        seed=RngStream(124),
    )
    co = md.simulate_hawkes_coupled(c)
    ok = md.reverify(co.prelimit) and md.reverify(co.limit)
    return CheckResult("hawkes_reverify", bool(ok), "both coupled outputs re-thinned bitwise")


def check_hawkes_event_rate(s) -> CheckResult:
    R = s["vol_reps"]
    c0 = md.HawkesMeanFieldConfig(
        kernel=md.ExponentialKernel(1.0),
        rate_fn=md.AffineRate(1.0, 0.5),
        N=16,
        T=3.0,
        h=0.02,
        n_obs=1,
        seed=RngStream(125),
    )
    xbar = md.solve_volterra_deterministic(c0.kernel, c0.rate_fn, c0.T, c0.h)
    expect = float(c0.h * np.sum(c0.rate_fn(xbar.values)))
    counts = np.empty(R)
    for r in range(R):
        c = md.HawkesMeanFieldConfig(
            kernel=c0.kernel, rate_fn=c0.rate_fn, N=16, T=3.0, h=0.02, n_obs=1,
            seed=RngStream(125, r),
        )
        co = md.simulate_hawkes_coupled(c)
        counts[r] = co.limit.counting_paths[0].jump_times.size
    se = counts.std(ddof=1) / math.sqrt(R)
    ok = abs(counts.mean() - expect) <= 4 * se
    return CheckResult(
        "hawkes_event_rate", bool(ok), f"mean={counts.mean():.3f} integral={expect:.3f} 4se={4*se:.3f}"
    )


def check_hawkes_median_ordering(s) -> CheckResult:
    R = s["median_reps"]
    if R == 0:
        return CheckResult("hawkes_median_ordering", True, "skipped at quick level")
    meds = {}
    for N in (8, 512):
        ds = []
        for r in range(R):
            c = md.HawkesMeanFieldConfig(
                kernel=md.ExponentialKernel(1.0),
                rate_fn=md.AffineRate(1.0, 0.5),
                N=N,
                T=5.0,
                h=0.05,
                n_obs=1,
                seed=RngStream(126, 1000 * N + r),
            )
            co = md.simulate_hawkes_coupled(c)
            ds.append(uniform_distance(co.prelimit.counting_paths[0], co.limit.counting_paths[0]))
        meds[N] = float(np.median(ds))
    ok = meds[512] <= meds[8]
    return CheckResult("hawkes_median_ordering", ok, f"median@512={meds[512]} <= median@8={meds[8]}")


# ---------------------------------------------------------------------------
# checks: diagnostics


def check_ks_oracle(s) -> CheckResult:
    a = dg.SampleSet(np.array([1.0, 2.0, 3.0]))
    b = dg.SampleSet(np.array([1.0, 2.0, 4.0]))
    gen = RngStream(127).generator()
    ok = (
        abs(dg.ks_statistic(a, b) - 1.0 / 3.0) < 1e-15
        and dg.ks_statistic(a, a) == 0.0
        and dg.ks_statistic(dg.SampleSet(np.array([0.0, 0.5])), dg.SampleSet(np.array([2.0, 3.0]))) == 1.0
    )
    for case in range(20):
        xs = dg.SampleSet(gen.standard_normal(int(gen.integers(2, 40))))
        ys = dg.SampleSet(gen.standard_normal(int(gen.integers(2, 40))))
        d1, d2 = dg.ks_statistic(xs, ys), dg.ks_statistic(ys, xs)
        ok &= abs(d1 - d2) < 1e-15 and 0.0 <= d1 <= 1.0
    ok &= dg.wasserstein_distance(a, b) == 1.0 / 3.0
    return CheckResult("ks_oracle", bool(ok), "pinned values and symmetry")


def check_fit_oracle(s) -> CheckResult:
    rows = tuple(dg.RateRow(N, N ** -0.5, 0.01, 10) for N in (8, 16, 32, 64))
    f = dg.fit_rate(dg.RateCurve(rows))
    rows2 = tuple(dg.RateRow(N, 3.0 / N, 0.01, 10) for N in (8, 16, 32))
    f2 = dg.fit_rate(dg.RateCurve(rows2))
    ok = abs(f.slope + 0.5) < 1e-12 and f.r_squared > 1 - 1e-12
    ok &= abs(f2.slope + 1.0) < 1e-12 and abs(f2.intercept - math.log(3.0)) < 1e-12
    try:
        dg.fit_rate(dg.RateCurve(tuple(dg.RateRow(N, 0.0, 0.0, 5) for N in (2, 4, 8))))
        ok = False
    except DegenerateFitError:
        pass
    return CheckResult("fit_oracle", bool(ok), "synthetic slopes exact, zero rows rejected")


def check_rate_curve_props(s) -> CheckResult:
    c = md.HawkesMeanFieldConfig(
        kernel=md.ExponentialKernel(1.0),
        rate_fn=md.AffineRate(1.0, 0.5),
        N=8,
        T=2.0,
        h=0.05,
        n_obs=1,
        seed=RngStream(128),
    )
    cur1 = dg.coupling_error_curve(c, [8, 32, 128], s["rate_reps"])
    cur2 = dg.coupling_error_curve(c, [8, 32, 128], s["rate_reps"])
    ok = cur1 == cur2
    const = md.HawkesMeanFieldConfig(
        kernel=md.ExponentialKernel(1.0),
        rate_fn=md.ConstRate(1.0),
        N=8,
        T=2.0,
        h=0.05,
        n_obs=1,
        seed=RngStream(129),
    )
    flat = dg.coupling_error_curve(const, [4, 16], 10)
    ok &= all(r.mean_error == 0.0 for r in flat.rows)
    se_scale = True
    if s["rate_reps"] >= 100:
        half = dg.coupling_error_curve(c, [8, 32, 128], s["rate_reps"] // 2)
        for a, b in zip(cur1.rows, half.rows):
            if b.std_error > 0:
                se_scale &= 0.8 / math.sqrt(2.0) <= a.std_error / b.std_error <= 1.2 / math.sqrt(2.0) * 1.5
    ok &= se_scale
    return CheckResult("rate_curve_props", bool(ok), "deterministic, collapse flat, se scaling")


def check_marginal_null(s) -> CheckResult:
    R = s["null_reps"]
    c = md.MeanFieldDiffusiveConfig(alpha=1.0, N=4, T=1.0, n_obs=1, seed=RngStream(130))
    rep = dg.marginal_report(c, [4], [1.0], R, limit_h=0.02)
    null = rep.null_rows[0][1]
    ok = null <= rep.band99
    return CheckResult("marginal_null", bool(ok), f"null ks={null:.4f} within band99={rep.band99:.4f}")


def check_rate_csv_roundtrip(s) -> CheckResult:
    import tempfile, os

    rows = tuple(dg.RateRow(N, 1.0 / N, 0.01 * N, 7) for N in (2, 4, 8))
    cur = dg.RateCurve(rows)
    with tempfile.TemporaryDirectory() as td:
        p = os.path.join(td, "rate.csv")
        dg.save_rate_curve(cur, p)
        back = dg.load_rate_curve(p)
    return CheckResult("rate_csv_roundtrip", back == cur, "rate curve CSV round trip")


CHECKS = [
    check_window_moments,
    check_window_uniformity,
    check_window_determinism,
    check_window_extension,
    check_window_restrict,
    check_window_roundtrip,
    check_matching_oracle,
    check_path_eval,
    check_path_metrics,
    check_skorohod,
    check_time_change,
    check_path_roundtrip,
    check_phi_oracle,
    check_phi_boundary,
    check_phi_monotone,
    check_phi_restriction,
    check_phi_superposition,
    check_conditions_detect,
    check_counterexample,
    check_solver_closed_forms,
    check_meanfield_small_mean,
    check_meanfield_energy,
    check_meanfield_t0,
    check_euler_zero_noise,
    check_meanfield_limit_stats,
    check_meanfield_limit_reverify,
    check_volterra_degenerate,
    check_volterra_single_atom,
    check_volterra_compensator,
    check_volterra_reverify,
    check_volterra_limit_stats,
    check_hawkes_collapse,
    check_hawkes_reverify,
    check_hawkes_event_rate,
    check_hawkes_median_ordering,
    check_ks_oracle,
    check_fit_oracle,
    check_rate_curve_props,
    check_marginal_null,
    check_rate_csv_roundtrip,
]


def run(level: str = "quick") -> tuple[list[CheckResult], dict]:
    """Run every registered check at the given level; returns results + report."""
    if level not in ("quick", "full"):
        raise ValidationError("selftest level must be 'quick' or 'full'")
    sizes = QUICK if level == "quick" else FULL
    results: list[CheckResult] = []
    t0 = time.time()
    for fn in CHECKS:
        try:
            r = fn(sizes)
            # numpy comparison chains can leave np.bool_ here; JSON needs bool
            results.append(CheckResult(r.name, bool(r.passed), r.detail))
        except Exception as exc:  # a crashed check is a failed check
            results.append(CheckResult(fn.__name__, False, f"raised {type(exc).__name__}: {exc}"))
    report = {
        "level": level,
        "passed": all(r.passed for r in results),
        "n_checks": len(results),
        "n_failed": sum(1 for r in results if not r.passed),
        "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results],
        "elapsed_seconds": round(time.time() - t0, 3),
    }
    return results, report
