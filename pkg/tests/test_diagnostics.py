import math

import numpy as np
import pytest

from ppthin import (
    ConstRate,
    DegenerateFitError,
    ExponentialKernel,
    HawkesMeanFieldConfig,
    MeanFieldDiffusiveConfig,
    RateCurve,
    RateFit,
    RateRow,
    RngStream,
    SampleSet,
    ValidationError,
    coupling_error_curve,
    fit_rate,
    ks_band,
    ks_statistic,
    load_rate_curve,
    marginal_report,
    save_marginal_report,
    save_rate_curve,
    wasserstein_distance,
)


def tiny_hawkes(seed=40):
    return HawkesMeanFieldConfig(
        kernel=ExponentialKernel(1.0),
        rate_fn=ConstRate(1.0),
        N=2,
        T=1.0,
        h=0.1,
        seed=RngStream(seed),
    )


# sample sets and distances


def test_sampleset_validation():
    s = SampleSet(np.array([1.0, 2.0]), "a")
    assert len(s) == 2
    with pytest.raises(ValidationError):
        SampleSet(np.zeros((2, 2)))
    with pytest.raises(ValidationError):
        SampleSet(np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        s.values[0] = 0.0


def test_ks_pinned_values():
    a = SampleSet(np.array([1.0, 2.0, 3.0]))
    b = SampleSet(np.array([1.0, 2.0, 4.0]))
    assert ks_statistic(a, b) == pytest.approx(1.0 / 3.0)
    assert ks_statistic(a, a) == 0.0
    far = SampleSet(np.array([10.0, 11.0, 12.0]))
    assert ks_statistic(a, far) == 1.0
    ties_a = SampleSet(np.array([0.0, 0.0, 1.0]))
    ties_b = SampleSet(np.array([0.0, 1.0, 1.0]))
    assert ks_statistic(ties_a, ties_b) == pytest.approx(1.0 / 3.0)


def test_ks_symmetry_and_range():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = SampleSet(rng.normal(size=rng.integers(1, 30)))
        b = SampleSet(rng.normal(size=rng.integers(1, 30)))
        d = ks_statistic(a, b)
        assert d == ks_statistic(b, a)
        assert 0.0 <= d <= 1.0
    with pytest.raises(ValidationError):
        ks_statistic(SampleSet(np.array([])), a)


def test_wasserstein():
    a = SampleSet(np.array([0.0, 1.0, 2.0]))
    b = SampleSet(np.array([0.0, 1.0, 3.0]))
    assert wasserstein_distance(a, b) == pytest.approx(1.0 / 3.0)
    assert wasserstein_distance(a, a) == 0.0
    # sorting makes it permutation invariant
    shuffled = SampleSet(np.array([3.0, 0.0, 1.0]))
    assert wasserstein_distance(a, shuffled) == pytest.approx(1.0 / 3.0)
    with pytest.raises(ValidationError):
        wasserstein_distance(a, SampleSet(np.array([1.0, 2.0])))
    with pytest.raises(ValidationError):
        wasserstein_distance(SampleSet(np.array([])), SampleSet(np.array([])))


def test_ks_band_formula():
    c = math.sqrt(-0.5 * math.log(0.005))
    assert ks_band(500, 500, 0.01) == pytest.approx(c * math.sqrt(1000.0 / 250000.0))
    assert ks_band(100, 400) == pytest.approx(c * math.sqrt(500.0 / 40000.0))
    with pytest.raises(ValidationError):
        ks_band(0, 10)


# rate curves and fitting


def test_rate_row_and_curve_validation():
    with pytest.raises(ValidationError):
        RateRow(0, 1.0, 0.1, 10)
    with pytest.raises(ValidationError):
        RateRow(4, 1.0, 0.1, 1)
    with pytest.raises(ValidationError):
        RateRow(4, -1.0, 0.1, 10)
    with pytest.raises(ValidationError):
        RateCurve((RateRow(8, 1.0, 0.1, 10), RateRow(8, 0.5, 0.1, 10)))


def test_fit_rate_recovers_exact_power_laws():
    rows = tuple(RateRow(N, N ** -0.5, 0.01, 10) for N in (4, 16, 64, 256))
    fit = fit_rate(RateCurve(rows))
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == 1.0
    rows2 = tuple(RateRow(N, 3.0 / N, 0.01, 10) for N in (2, 4, 8, 16))
    fit2 = fit_rate(RateCurve(rows2))
    assert fit2.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit2.intercept == pytest.approx(math.log(3.0), abs=1e-12)


def test_fit_rate_degenerate_cases():
    with pytest.raises(DegenerateFitError):
        fit_rate(RateCurve((RateRow(4, 1.0, 0.1, 10), RateRow(8, 0.5, 0.1, 10))))
    rows = (RateRow(4, 0.0, 0.0, 10), RateRow(8, 0.5, 0.1, 10), RateRow(16, 0.2, 0.1, 10))
    with pytest.raises(DegenerateFitError):
        fit_rate(RateCurve(rows))
    assert isinstance(RateFit(-0.5, 0.0, 1.0), RateFit)


# coupling error experiment


def test_coupling_error_curve_constant_rate_is_exact():
    curve = coupling_error_curve(tiny_hawkes(), [2, 4], replicates=3)
    assert all(r.mean_error == 0.0 and r.std_error == 0.0 for r in curve.rows)
    assert [r.N for r in curve.rows] == [2, 4]
    assert all(r.replicates == 3 for r in curve.rows)
    with pytest.raises(DegenerateFitError):
        fit_rate(curve)


def test_coupling_error_curve_determinism_and_jobs():
    from ppthin import AffineRate

    base = HawkesMeanFieldConfig(
        kernel=ExponentialKernel(1.0),
        rate_fn=AffineRate(1.0, 0.5),
        N=2,
        T=1.0,
        h=0.1,
        seed=RngStream(41),
    )
    a = coupling_error_curve(base, [2, 4], replicates=4)
    b = coupling_error_curve(base, [2, 4], replicates=4)
    assert a == b
    # per-pair streams make the result independent of scheduling
    c = coupling_error_curve(base, [2, 4], replicates=4, jobs=2)
    assert a == c


def test_coupling_error_curve_validation():
    with pytest.raises(ValidationError):
        coupling_error_curve(tiny_hawkes(), [], replicates=3)
    with pytest.raises(ValidationError):
        coupling_error_curve(tiny_hawkes(), [4, 4], replicates=3)
    with pytest.raises(ValidationError):
        coupling_error_curve(tiny_hawkes(), [2, 4], replicates=1)


# marginal experiment


def test_marginal_report_structure_and_determinism():
    c = MeanFieldDiffusiveConfig(alpha=1.0, N=2, T=0.5, seed=RngStream(42))
    rep = marginal_report(c, [2, 4], [0.25, 0.5], replicates=50, limit_h=0.05)
    assert len(rep.rows) == 4
    assert len(rep.null_rows) == 2
    assert rep.replicates == 50
    assert rep.band99 == pytest.approx(ks_band(50, 50, 0.01))
    for N, t, ks, w in rep.rows:
        assert N in (2, 4) and t in (0.25, 0.5)
        assert 0.0 <= ks <= 1.0 and w >= 0.0
    for t, ks in rep.null_rows:
        assert 0.0 <= ks <= 1.0
    again = marginal_report(c, [2, 4], [0.25, 0.5], replicates=50, limit_h=0.05)
    assert rep == again


def test_marginal_report_validation():
    c = MeanFieldDiffusiveConfig(alpha=1.0, N=2, T=0.5, seed=RngStream(43))
    with pytest.raises(ValidationError):
        marginal_report(c, [2], [0.25], replicates=49)
    with pytest.raises(ValidationError):
        marginal_report(c, [2], [0.6], replicates=50)
    with pytest.raises(ValidationError):
        marginal_report(c, [2], [0.0], replicates=50)
    with pytest.raises(ValidationError):
        marginal_report(c, [], [0.25], replicates=50)


# CSV round trips


def test_rate_curve_roundtrip(tmp_path):
    rows = tuple(RateRow(N, 1.0 / math.sqrt(N) + 1e-17, 0.01 * N, 7) for N in (2, 8, 32))
    curve = RateCurve(rows)
    p = str(tmp_path / "curve.csv")
    save_rate_curve(curve, p)
    assert load_rate_curve(p) == curve


def test_rate_curve_loader_errors(tmp_path):
    p = tmp_path / "bad_header.csv"
    p.write_text("n,mean,std,reps\n4,0.5,0.1,10\n")
    with pytest.raises(ValidationError, match="header"):
        load_rate_curve(str(p))
    q = tmp_path / "bad_row.csv"
    q.write_text("N,mean_error,std_error,replicates\n4,0.5,0.1,10\n8,oops,0.1,10\n")
    with pytest.raises(ValidationError, match=":3:"):
        load_rate_curve(str(q))
    r = tmp_path / "short_row.csv"
    r.write_text("N,mean_error,std_error,replicates\n4,0.5\n")
    with pytest.raises(ValidationError, match=":2:"):
        load_rate_curve(str(r))


def test_save_marginal_report(tmp_path):
    from ppthin import MarginalReport

    rep = MarginalReport(
        rows=((4, 1.0, 0.25, 0.5), (16, 1.0, 0.125, 0.25)),
        null_rows=((1.0, 0.05),),
        band99=0.1,
        replicates=100,
    )
    p = tmp_path / "marginal.csv"
    save_marginal_report(rep, str(p))
    lines = p.read_text().strip().split("\n")
    assert lines[0] == "N,t,ks,wasserstein"
    assert len(lines) == 3
    assert lines[1].startswith("4,1.0,0.25")
