import numpy as np
import pytest

from ppthin import (
    Atom,
    PointMeasureWindow,
    Rectangle,
    RngStream,
    ValidationError,
    count,
    extend_window,
    is_simple,
    load_window,
    match_atoms,
    restrict,
    sample_window,
    save_window,
)


def test_window_rejects_bad_geometry():
    with pytest.raises(ValidationError):
        PointMeasureWindow(0.0, 1.0)
    with pytest.raises(ValidationError):
        PointMeasureWindow(1.0, -0.5)
    with pytest.raises(ValidationError):
        PointMeasureWindow(1.0, 1.0, [(0.5, 2.0)])  # mark above bound
    with pytest.raises(ValidationError):
        PointMeasureWindow(1.0, 1.0, [(1.5, 0.5)])  # time past horizon


def test_window_rejects_unsorted_atoms():
    with pytest.raises(ValidationError):
        PointMeasureWindow(1.0, 1.0, [(0.6, 0.1), (0.4, 0.2)])
    with pytest.raises(ValidationError):
        PointMeasureWindow(1.0, 1.0, [(0.4, 0.2), (0.4, 0.2)])
    # equal times with increasing marks are representable
    w = PointMeasureWindow(1.0, 1.0, [(0.4, 0.2), (0.4, 0.5)])
    assert len(w) == 2 and not is_simple(w)


def test_marked_atoms_require_u():
    with pytest.raises(ValidationError):
        PointMeasureWindow(1.0, 1.0, [(0.5, 0.5)], marked=True)
    with pytest.raises(ValidationError):
        PointMeasureWindow(1.0, 1.0, [(0.5, 0.5, 1.3)], marked=False)
    w = PointMeasureWindow(1.0, 1.0, [Atom(0.5, 0.5, 1.3)], marked=True)
    assert w.u is not None and w.u[0] == 1.3


def test_sampler_moments_smoke():
    gen_counts = []
    for r in range(400):
        w = sample_window(2.0, 3.0, False, RngStream(11, r))
        gen_counts.append(len(w))
        assert is_simple(w)
    counts = np.asarray(gen_counts, dtype=float)
    # mean and variance of a Poisson(6) count, loose 4-sigma style bounds
    assert abs(counts.mean() - 6.0) < 0.5
    assert abs(counts.var(ddof=1) - 6.0) < 1.5


def test_sampler_marks_in_range_and_sorted():
    w = sample_window(5.0, 2.5, True, RngStream(12))
    assert np.all(np.diff(w.times) > 0.0)
    assert np.all((w.marks >= 0.0) & (w.marks <= 2.5))
    assert np.all((w.times >= 0.0) & (w.times <= 5.0))
    assert w.u is not None and w.u.shape == w.times.shape


def test_sampler_determinism():
    a = sample_window(2.0, 3.0, True, RngStream(13, 7))
    b = sample_window(2.0, 3.0, True, RngStream(13, 7))
    c = sample_window(2.0, 3.0, True, RngStream(13, 8))
    assert a == b
    assert not (a == c)


def test_count_rectangle_edges():
    w = PointMeasureWindow(2.0, 2.0, [(0.5, 1.0), (1.0, 0.5), (1.5, 2.0)])
    # half-open in time: t = t1 excluded; closed in mark
    assert count(w, Rectangle(0.5, 1.0, 0.0, 2.0)) == 1
    assert count(w, Rectangle(0.5, 1.5, 0.0, 2.0)) == 2
    assert count(w, Rectangle(0.0, 2.0, 1.0, 2.0)) == 2
    assert count(w, Rectangle(0.0, 2.0, 0.0, 0.5)) == 1
    with pytest.raises(ValidationError):
        count(w, Rectangle(0.0, 3.0, 0.0, 1.0))
    with pytest.raises(ValidationError):
        count(w, Rectangle(0.0, 1.0, 0.0, 3.0))


def test_extension_is_superposition():
    for r in range(25):
        w = sample_window(2.0, 1.0, False, RngStream(14, r))
        we = extend_window(w, 2.5, RngStream(14, 1000 + r))
        assert we.mark_bound == 2.5
        assert is_simple(we)
        # every old atom survives, everything new sits strictly above
        old = set(zip(w.times.tolist(), w.marks.tolist()))
        new = set(zip(we.times.tolist(), we.marks.tolist()))
        assert old <= new
        assert all(z > 1.0 for _, z in new - old)
        assert count(we, Rectangle(0.0, 2.0, 0.0, 1.0)) == len(
            [1 for _, z in old if z <= 1.0]
        )
    with pytest.raises(ValidationError):
        extend_window(w, 0.5, RngStream(14))


def test_extension_keeps_u_marks():
    w = sample_window(2.0, 1.0, True, RngStream(15))
    we = extend_window(w, 3.0, RngStream(15, 1))
    assert we.marked and we.u is not None
    lookup = {(t, z): u for t, z, u in zip(we.times, we.marks, we.u)}
    for t, z, u in zip(w.times, w.marks, w.u):
        assert lookup[(t, z)] == u


def test_restrict_masks_and_validates():
    w = sample_window(3.0, 2.0, False, RngStream(16))
    r = restrict(w, 1.5, 1.0)
    keep = (w.times < 1.5) & (w.marks <= 1.0)
    assert np.array_equal(r.times, w.times[keep])
    assert np.array_equal(r.marks, w.marks[keep])
    assert r.horizon == 1.5 and r.mark_bound == 1.0
    with pytest.raises(ValidationError):
        restrict(w, 4.0, 2.0)
    with pytest.raises(ValidationError):
        restrict(w, 3.0, 2.5)


def _brute_match(a, b):
    import itertools

    best_cost, best_perm = np.inf, None
    for perm in itertools.permutations(range(len(a))):
        cost = 0.0
        for i, j in enumerate(perm):
            cost = max(cost, abs(a.times[i] - b.times[j]), abs(a.marks[i] - b.marks[j]))
        if cost < best_cost or (cost == best_cost and perm < best_perm):
            best_cost, best_perm = cost, perm
    return best_perm, best_cost


def test_match_atoms_against_exhaustive():
    gen = RngStream(17).generator()
    for case in range(60):
        n = int(gen.integers(1, 7))
        wa = PointMeasureWindow.from_arrays(
            1.0, 1.0, np.sort(gen.uniform(0, 1, n)), gen.uniform(0, 1, n)
        )
        wb = PointMeasureWindow.from_arrays(
            1.0, 1.0, np.sort(gen.uniform(0, 1, n)), gen.uniform(0, 1, n)
        )
        m = match_atoms(wa, wb)
        perm, cost = _brute_match(wa, wb)
        assert m.permutation == perm
        assert m.max_displacement == pytest.approx(cost, abs=1e-12)


def test_match_atoms_identity_and_edges():
    w = sample_window(2.0, 1.0, False, RngStream(18))
    m = match_atoms(w, w)
    assert m.permutation == tuple(range(len(w)))
    assert m.max_displacement == 0.0
    empty = PointMeasureWindow(1.0, 1.0)
    assert match_atoms(empty, empty).permutation == ()
    with pytest.raises(ValidationError):
        match_atoms(w, empty)


def test_window_csv_roundtrip(tmp_path):
    for marked in (False, True):
        w = sample_window(2.0, 3.0, marked, RngStream(19, int(marked)))
        p = tmp_path / f"w_{marked}.csv"
        save_window(w, str(p))
        assert load_window(str(p), 2.0, 3.0) == w


def test_window_loader_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n1,2\n")
    with pytest.raises(ValidationError):
        load_window(str(p), 2.0, 3.0)
    p.write_text("t,z\n0.5\n")
    with pytest.raises(ValidationError, match="line 2"):
        load_window(str(p), 2.0, 3.0)
    p.write_text("t,z\n0.5,oops\n")
    with pytest.raises(ValidationError, match="line 2"):
        load_window(str(p), 2.0, 3.0)
    # loader re-validates geometry against the declared window
    p.write_text("t,z\n0.5,2.9\n")
    with pytest.raises(ValidationError):
        load_window(str(p), 2.0, 1.0)


def test_save_refuses_shared_times(tmp_path):
    w = PointMeasureWindow(1.0, 1.0, [(0.4, 0.2), (0.4, 0.5)])
    with pytest.raises(ValidationError):
        save_window(w, str(tmp_path / "w.csv"))
