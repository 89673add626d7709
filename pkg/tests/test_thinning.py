import numpy as np
import pytest

from ppthin import (
    GridPath,
    MarkBoundError,
    PointMeasureWindow,
    RngStream,
    StepPath,
    ThinningInput,
    ValidationError,
    check_conditions,
    phi,
    sample_window,
)


def naive_left(x, t):
    # reference left limit computed by walking, no searchsorted anywhere
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


def naive_thin(x, w, horizon):
    out = []
    for t, z in zip(w.times, w.marks):
        if t <= horizon and z <= naive_left(x, t):
            out.append(float(t))
    return out


def random_grid(gen, horizon):
    n = int(gen.integers(1, 12))
    h = horizon / n * float(gen.uniform(0.9, 1.4))
    n_cells = int(np.ceil(horizon / h - 1e-9))
    return GridPath(h, gen.uniform(0.0, 3.0, n_cells), horizon)


def test_phi_matches_naive_oracle():
    gen = RngStream(31).generator()
    for case in range(150):
        horizon = float(gen.uniform(0.5, 3.0))
        x = random_grid(gen, horizon)
        w = sample_window(horizon, 3.5, False, RngStream(31, case))
        z = phi(ThinningInput([x], [w], horizon))[0]
        assert z.jump_times.tolist() == naive_thin(x, w, horizon)
        # counting path is the unit-jump staircase of accepted atoms
        assert np.array_equal(z.jump_values, np.arange(1, z.jump_times.size + 1))


def test_phi_step_intensities_too():
    gen = RngStream(32).generator()
    for case in range(60):
        jumps = np.sort(gen.uniform(0.1, 1.9, int(gen.integers(0, 5))))
        jumps = np.unique(jumps)
        x = StepPath.from_arrays(
            float(gen.uniform(0, 3)), jumps, gen.uniform(0.0, 3.0, jumps.size), 2.0
        )
        w = sample_window(2.0, 3.5, False, RngStream(32, case))
        z = phi(ThinningInput([x], [w], 2.0))[0]
        assert z.jump_times.tolist() == naive_thin(x, w, 2.0)


def test_boundary_mark_is_accepted():
    # mark exactly equal to the left limit: closed inequality, accept
    x = StepPath(2.0, [(0.5, 1.0)], 2.0)
    w = PointMeasureWindow(2.0, 2.0, [(0.5, 2.0), (0.7, 1.0), (1.5, 1.5)])
    z = phi(ThinningInput([x], [w], 2.0))[0]
    # at 0.5 the left limit is still 2.0; at 0.7 it is exactly 1.0
    assert z.jump_times.tolist() == [0.5, 0.7]


def test_atom_at_zero_rejected_path():
    x = StepPath(1.0, (), 1.0)
    w = PointMeasureWindow(1.0, 1.0, [(0.0, 0.5)])
    with pytest.raises(ValidationError):
        phi(ThinningInput([x], [w], 1.0))
    # an atom at 0 above the intensity is merely thinned away
    w2 = PointMeasureWindow(1.0, 2.0, [(0.0, 1.5)])
    z = phi(ThinningInput([x], [w2], 1.0))[0]
    assert z.jump_times.size == 0


def test_mark_bound_must_dominate():
    x = GridPath(0.5, [1.0, 4.0], 1.0)
    w = sample_window(1.0, 2.0, False, RngStream(33))
    with pytest.raises(MarkBoundError):
        ThinningInput([x], [w], 1.0)


def test_negative_intensity_rejected():
    x = StepPath(1.0, [(0.5, -0.5)], 1.0)
    w = sample_window(1.0, 2.0, False, RngStream(34))
    with pytest.raises(ValidationError):
        ThinningInput([x], [w], 1.0)


def test_input_shape_validation():
    x = StepPath(1.0, (), 1.0)
    w = sample_window(1.0, 2.0, False, RngStream(35))
    with pytest.raises(ValidationError):
        ThinningInput([], [], 1.0)
    with pytest.raises(ValidationError):
        ThinningInput([x], [w, w], 1.0)
    with pytest.raises(ValidationError):
        ThinningInput([x], [w], 1.5)  # horizon exceeds path and window


def test_monotone_in_intensity():
    gen = RngStream(36).generator()
    for case in range(40):
        x = random_grid(gen, 2.0)
        hi = GridPath(x.h, x.values + float(gen.uniform(0.1, 0.6)), 2.0)
        w = sample_window(2.0, 4.0, False, RngStream(36, case))
        lo_t = set(phi(ThinningInput([x], [w], 2.0))[0].jump_times.tolist())
        hi_t = set(phi(ThinningInput([hi], [w], 2.0))[0].jump_times.tolist())
        assert lo_t <= hi_t


def test_restriction_equivariance():
    gen = RngStream(37).generator()
    for case in range(40):
        x = random_grid(gen, 2.0)
        w = sample_window(2.0, 4.0, False, RngStream(37, case))
        full = phi(ThinningInput([x], [w], 2.0))[0]
        half = phi(ThinningInput([x], [w], 1.0))[0]
        assert full.restricted(1.0) == half


def test_counting_bounded_by_atoms():
    gen = RngStream(38).generator()
    for case in range(20):
        x = random_grid(gen, 2.0)
        w = sample_window(2.0, 4.0, False, RngStream(38, case))
        z = phi(ThinningInput([x], [w], 2.0))[0]
        assert z.jump_times.size <= len(w)
        assert z.eval(2.0) == z.jump_times.size


def test_multicomponent_is_componentwise():
    gen = RngStream(39).generator()
    x1, x2 = random_grid(gen, 2.0), random_grid(gen, 2.0)
    w1 = sample_window(2.0, 4.0, False, RngStream(39, 0))
    w2 = sample_window(2.0, 4.0, False, RngStream(39, 1))
    both = phi(ThinningInput([x1, x2], [w1, w2], 2.0))
    assert both[0] == phi(ThinningInput([x1], [w1], 2.0))[0]
    assert both[1] == phi(ThinningInput([x2], [w2], 2.0))[0]


def test_conditions_flag_each_violation():
    x = StepPath(1.0, (), 2.0)
    # (a) a window with a shared atom time is not simple
    wa = PointMeasureWindow.from_arrays(2.0, 2.0, np.array([0.5, 0.5]), np.array([0.2, 0.4]))
    rep = check_conditions(ThinningInput([x], [wa], 2.0))
    assert not rep.condition_a and rep.violations_a
    # (b) two measures sharing an atom time
    w1 = PointMeasureWindow(2.0, 1.0, [(0.5, 0.2)])
    w2 = PointMeasureWindow(2.0, 1.0, [(0.5, 0.3)])
    rep = check_conditions(ThinningInput([x, x], [w1, w2], 2.0))
    assert rep.condition_a and not rep.condition_b
    # (c) atom at a discontinuity of the intensity
    xc = StepPath(1.0, [(0.5, 0.8)], 2.0)
    rep = check_conditions(ThinningInput([xc], [w1], 2.0))
    assert not rep.condition_c
    # (d) mark exactly on the left limit
    wd = PointMeasureWindow(2.0, 1.0, [(0.7, 1.0)])
    rep = check_conditions(ThinningInput([x], [wd], 2.0))
    assert not rep.condition_d and rep.violations_d == ((0, 0.7, 1.0),)
    assert not rep.all_ok


def test_conditions_pinned_discontinuity_example():
    x = StepPath(1.0, (), 2.0)
    w = PointMeasureWindow(2.0, 1.0, [(1.0, 1.0)])
    rep = check_conditions(ThinningInput([x], [w], 2.0))
    assert rep.condition_a and rep.condition_b and rep.condition_c
    assert not rep.condition_d
    assert rep.violations_d == ((0, 1.0, 1.0),)


def test_conditions_empty_measures_all_ok():
    x = GridPath(0.5, [1.0, 2.0], 1.0)
    w = PointMeasureWindow(1.0, 2.5)
    rep = check_conditions(ThinningInput([x], [w], 1.0))
    assert rep.all_ok


def test_conditions_hold_under_independence():
    # independently sampled intensity and window: violations have measure zero
    gen = RngStream(40).generator()
    for case in range(1000):
        x = random_grid(gen, 2.0)
        w = sample_window(2.0, 3.5, False, RngStream(40, case))
        rep = check_conditions(ThinningInput([x], [w], 2.0))
        assert rep.all_ok


def test_conditions_never_raise_and_report_dict():
    x = StepPath(1.0, [(0.5, 0.8)], 2.0)
    w = PointMeasureWindow.from_arrays(2.0, 2.0, np.array([0.5, 0.5]), np.array([0.5, 0.8]))
    rep = check_conditions(ThinningInput([x], [w], 2.0))
    d = rep.to_dict()
    assert set(d) >= {"condition_a", "condition_b", "condition_c", "condition_d"}
    assert d["condition_a"] is False
