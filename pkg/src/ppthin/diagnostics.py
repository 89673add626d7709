"""Statistical evidence layer: marginal comparison, error curves, rate fits.

Convergence of the particle systems is tested two ways: through exact
two-sample statistics on time-marginals (KS, and Wasserstein-1 as a
secondary), and through the pathwise coupling error sup|Z^N - Z-bar| whose
mean is regressed against N on log-log axes.  Everything is deterministic
given the master seed: each (N, replicate) pair owns a derived stream id, so
aggregation is independent of execution order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed

from .errors import DegenerateFitError, ValidationError
from .models import (
    HawkesMeanFieldConfig,
    MeanFieldDiffusiveConfig,
    simulate_hawkes_coupled,
    simulate_meanfield_limit,
    simulate_meanfield_prelimit,
)
from .paths import uniform_distance
from .rng import RngStream, derive_stream_id

__all__ = [
    "SampleSet",
    "RateRow",
    "RateCurve",
    "RateFit",
    "MarginalReport",
    "ks_statistic",
    "wasserstein_distance",
    "ks_band",
    "fit_rate",
    "coupling_error_curve",
    "marginal_report",
    "save_rate_curve",
    "load_rate_curve",
    "save_marginal_report",
]


@dataclass(frozen=True)
class SampleSet:
    """A labeled multiset of real observations."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValidationError("sample values must form a 1-d array")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("sample values must be finite")
        object.__setattr__(self, "values", vals)
        vals.setflags(write=False)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class RateRow:
    N: int
    mean_error: float
    std_error: float
    replicates: int

    def __post_init__(self) -> None:
        if self.N < 1 or self.replicates < 2:
            raise ValidationError("rate row needs N >= 1 and replicates >= 2")
        if self.mean_error < 0.0 or self.std_error < 0.0:
            raise ValidationError("rate row errors must be nonnegative")


@dataclass(frozen=True)
class RateCurve:
    """Mean coupling error against N, with standard errors of the mean."""

    rows: tuple[RateRow, ...]

    def __post_init__(self) -> None:
        ns = [r.N for r in self.rows]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValidationError("rate curve rows must have strictly increasing N")


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class MarginalReport:
    """KS/Wasserstein of prelimit vs limit marginals, with null calibration.

    rows hold (N, t, ks, wasserstein); null_rows hold (t, ks) for two
    independent limit banks of the same size, and band99 is the exact-size
    two-sample KS 99% threshold, so 'looks like the limit' can be judged
    against both an empirical and an analytic yardstick.
    """

    rows: tuple[tuple[int, float, float, float], ...]
    null_rows: tuple[tuple[float, float], ...]
    band99: float
    replicates: int


# ---------------------------------------------------------------------------
# statistics


def ks_statistic(a: SampleSet, b: SampleSet) -> float:
    """Exact two-sample Kolmogorov-Smirnov statistic.

    Sup over the merged sample points of |F_a - F_b| with right-continuous
    empirical CDFs; no asymptotics involved.
    """
    if len(a) == 0 or len(b) == 0:
        raise ValidationError("ks_statistic requires nonempty samples")
    xa = np.sort(a.values)
    xb = np.sort(b.values)
    grid = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, grid, side="right") / xa.size
    fb = np.searchsorted(xb, grid, side="right") / xb.size
    return float(np.max(np.abs(fa - fb)))


def wasserstein_distance(a: SampleSet, b: SampleSet) -> float:
    """W1 between equal-size empirical laws: mean |sorted a - sorted b|."""
    if len(a) == 0 or len(b) == 0:
        raise ValidationError("wasserstein_distance requires nonempty samples")
    if len(a) != len(b):
        raise ValidationError("wasserstein_distance requires equal sample sizes")
    return float(np.mean(np.abs(np.sort(a.values) - np.sort(b.values))))


def ks_band(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample KS acceptance threshold c(alpha)*sqrt((n+m)/(nm))."""
    if n < 1 or m < 1:
        raise ValidationError("ks_band requires positive sample sizes")
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))


def fit_rate(curve: RateCurve) -> RateFit:
    """OLS of log(mean_error) on log(N); slope is the empirical decay exponent."""
    if len(curve.rows) < 3:
        raise DegenerateFitError("rate fit needs at least 3 rows")
    if any(r.mean_error <= 0.0 for r in curve.rows):
        raise DegenerateFitError(
            "zero mean_error row: coupling is exact, nothing to regress"
        )
    x = np.log([r.N for r in curve.rows])
    y = np.log([r.mean_error for r in curve.rows])
    design = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), res, _, _ = np.linalg.lstsq(design, y, rcond=None)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(res[0]) if res.size else float(np.sum((design @ [slope, intercept] - y) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return RateFit(float(slope), float(intercept), r2)


# ---------------------------------------------------------------------------
# experiments


def _one_coupling_error(c: HawkesMeanFieldConfig, N: int, r: int) -> float:
    cfg = replace(c, N=N, seed=RngStream(c.seed.master_seed, derive_stream_id(N, r)))
    out = simulate_hawkes_coupled(cfg)
    return uniform_distance(out.prelimit.counting_paths[0], out.limit.counting_paths[0])


def coupling_error_curve(
    c: HawkesMeanFieldConfig, N_list: list[int], replicates: int, jobs: int = 1
) -> RateCurve:
    """Mean and standard error of sup_t |Z^{N,1}_t - Z-bar^1_t| per N.

    Each (N, replicate) pair owns the stream id derived from that pair under
    the config's master seed, so results do not depend on execution order or
    on the jobs count.
    """
    ns = list(N_list)
    if any(b <= a for a, b in zip(ns, ns[1:])) or not ns:
        raise ValidationError("N_list must be nonempty and strictly increasing")
    if replicates < 2:
        raise ValidationError("need replicates >= 2")
    pairs = [(N, r) for N in ns for r in range(replicates)]
    if jobs == 1:
        errs = [_one_coupling_error(c, N, r) for N, r in pairs]
    else:
        errs = Parallel(n_jobs=jobs)(delayed(_one_coupling_error)(c, N, r) for N, r in pairs)
    rows = []
    for i, N in enumerate(ns):
        block = np.asarray(errs[i * replicates : (i + 1) * replicates])
        mean = float(block.mean())
        se = float(block.std(ddof=1) / math.sqrt(replicates))
        rows.append(RateRow(N, mean, se, replicates))
    return RateCurve(tuple(rows))


def _prelimit_marginals(
    c: MeanFieldDiffusiveConfig, N: int, r: int, times: np.ndarray
) -> np.ndarray:
    cfg = replace(c, N=N, seed=RngStream(c.seed.master_seed, derive_stream_id("pre", N, r)))
    out = simulate_meanfield_prelimit(cfg)
    z = out.counting_paths[0]
    return np.asarray([z.eval(t) for t in times])


def _limit_marginals(
    c: MeanFieldDiffusiveConfig, bank: str, r: int, times: np.ndarray, h: float
) -> np.ndarray:
    stream = RngStream(c.seed.master_seed, derive_stream_id("lim", bank, r))
    out = simulate_meanfield_limit(c.alpha, c.T, h, stream, n_obs=1)
    z = out.counting_paths[0]
    return np.asarray([z.eval(t) for t in times])


def marginal_report(
    c: MeanFieldDiffusiveConfig,
    N_list: list[int],
    times: list[float],
    replicates: int,
    limit_h: float = 0.01,
    jobs: int = 1,
) -> MarginalReport:
    """Compare prelimit marginals Z^{N,1}_t against the limit's, per (N, t).

    One limit bank provides the reference samples; a second, independent bank
    calibrates the null: its KS against the first is what 'no detectable
    difference' looks like at this replicate count.
    """
    ns = list(N_list)
    ts = np.asarray(times, dtype=float)
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValidationError("N_list must be nonempty and strictly increasing")
    if replicates < 50:
        raise ValidationError("marginal comparison needs replicates >= 50")
    if ts.size == 0 or np.any(ts <= 0.0) or np.any(ts > c.T):
        raise ValidationError("times must lie in (0, T]")
    lim_jobs = [("A", r) for r in range(replicates)] + [("B", r) for r in range(replicates)]
    if jobs == 1:
        lim = [_limit_marginals(c, bank, r, ts, limit_h) for bank, r in lim_jobs]
        pre = [
            _prelimit_marginals(c, N, r, ts) for N in ns for r in range(replicates)
        ]
    else:
        lim = Parallel(n_jobs=jobs)(
            delayed(_limit_marginals)(c, bank, r, ts, limit_h) for bank, r in lim_jobs
        )
        pre = Parallel(n_jobs=jobs)(
            delayed(_prelimit_marginals)(c, N, r, ts)
            for N in ns
            for r in range(replicates)
        )
    bank_a = np.asarray(lim[:replicates])
    bank_b = np.asarray(lim[replicates:])
    pre_arr = np.asarray(pre).reshape(len(ns), replicates, ts.size)
    rows = []
    for i, N in enumerate(ns):
        for j, t in enumerate(ts):
            sa = SampleSet(pre_arr[i, :, j], f"Z^{N},1_t={t}")
            sb = SampleSet(bank_a[:, j], f"limit_t={t}")
            rows.append((N, float(t), ks_statistic(sa, sb), wasserstein_distance(sa, sb)))
    null_rows = []
    for j, t in enumerate(ts):
        null_rows.append(
            (
                float(t),
                ks_statistic(SampleSet(bank_a[:, j]), SampleSet(bank_b[:, j])),
            )
        )
    return MarginalReport(
        rows=tuple(rows),
        null_rows=tuple(null_rows),
        band99=ks_band(replicates, replicates, 0.01),
        replicates=replicates,
    )


# ---------------------------------------------------------------------------
# CSV round trips


def _fmt(x: float) -> str:
    return repr(float(x))


def save_rate_curve(curve: RateCurve, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "mean_error", "std_error", "replicates"])
        for r in curve.rows:
            writer.writerow([r.N, _fmt(r.mean_error), _fmt(r.std_error), r.replicates])


def load_rate_curve(path: str) -> RateCurve:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["N", "mean_error", "std_error", "replicates"]:
            raise ValidationError(f"{path}: unexpected rate curve header {header}")
        for i, rec in enumerate(reader, start=2):
            try:
                rows.append(RateRow(int(rec[0]), float(rec[1]), float(rec[2]), int(rec[3])))
            except (IndexError, ValueError) as exc:
                raise ValidationError(f"{path}:{i}: bad rate row {rec}: {exc}") from exc
    return RateCurve(tuple(rows))


def save_marginal_report(rep: MarginalReport, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "t", "ks", "wasserstein"])
        for N, t, ks, w in rep.rows:
            writer.writerow([N, _fmt(t), _fmt(ks), _fmt(w)])
