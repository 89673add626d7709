"""Poisson random measures restricted to finite windows [0,T] x [0,M].

A window realizes a unit-intensity Poisson random measure on the rectangle,
sampled exactly through its renewal representation: atom times are cumulative
sums of i.i.d. Exponential(M) interarrivals truncated at T, mark heights are
i.i.d. Uniform[0,M], and optional jump marks are i.i.d. standard normal, the
three families mutually independent.  Atoms are stored as parallel float
arrays sorted strictly by (t, z); almost surely the times are distinct, and
simplicity is enforced on file ingestion.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .rng import RngStream

__all__ = [
    "Atom",
    "PointMeasureWindow",
    "Rectangle",
    "AtomMatching",
    "sample_window",
    "extend_window",
    "count",
    "is_simple",
    "restrict",
    "match_atoms",
    "save_window",
    "load_window",
]


@dataclass(frozen=True)
class Atom:
    """Single point (t, z) with an optional jump mark u."""

    t: float
    z: float
    u: float | None = None


class PointMeasureWindow:
    """Atoms of a point measure on [0, horizon] x [0, mark_bound].

    `atoms` accepts Atom instances or (t, z) / (t, z, u) tuples; they must be
    sorted strictly increasing in (t, z) lexicographic order.  Shared atom
    times are representable (so simplicity checks have something to report)
    but samplers never produce them and loaders reject them.
    """

    __slots__ = ("horizon", "mark_bound", "marked", "times", "marks", "u", "_atoms")

    def __init__(
        self,
        horizon: float,
        mark_bound: float,
        atoms: Iterable[Atom | Sequence[float]] = (),
        marked: bool = False,
    ) -> None:
        horizon = float(horizon)
        mark_bound = float(mark_bound)
        if not horizon > 0.0:
            raise ValidationError("window horizon must be positive")
        if mark_bound < 0.0:
            raise ValidationError("window mark bound must be nonnegative")
        times_l: list[float] = []
        marks_l: list[float] = []
        u_l: list[float] = []
        for a in atoms:
            if isinstance(a, Atom):
                t, z, u = a.t, a.z, a.u
            else:
                t, z = a[0], a[1]
                u = a[2] if len(a) > 2 else None
            if marked:
                if u is None:
                    raise ValidationError("marked window requires a u mark on every atom")
                u_l.append(float(u))
            elif u is not None:
                raise ValidationError("unmarked window cannot carry u marks")
            times_l.append(float(t))
            marks_l.append(float(z))
        times = np.asarray(times_l, dtype=float)
        marks = np.asarray(marks_l, dtype=float)
        _validate_atoms(times, marks, horizon, mark_bound)
        self.horizon = horizon
        self.mark_bound = mark_bound
        self.marked = bool(marked)
        self.times = times
        self.marks = marks
        self.u = np.asarray(u_l, dtype=float) if marked else None
        for arr in (self.times, self.marks, self.u):
            if arr is not None:
                arr.setflags(write=False)
        self._atoms: tuple[Atom, ...] | None = None

    @classmethod
    def from_arrays(
        cls,
        horizon: float,
        mark_bound: float,
        times: np.ndarray,
        marks: np.ndarray,
        u: np.ndarray | None = None,
    ) -> "PointMeasureWindow":
        """Build a window from parallel arrays without per-atom objects."""
        w = cls.__new__(cls)
        horizon = float(horizon)
        mark_bound = float(mark_bound)
        if not horizon > 0.0:
            raise ValidationError("window horizon must be positive")
        if mark_bound < 0.0:
            raise ValidationError("window mark bound must be nonnegative")
        times = np.ascontiguousarray(times, dtype=float)
        marks = np.ascontiguousarray(marks, dtype=float)
        _validate_atoms(times, marks, horizon, mark_bound)
        w.horizon = horizon
        w.mark_bound = mark_bound
        w.marked = u is not None
        w.times = times
        w.marks = marks
        w.u = None if u is None else np.ascontiguousarray(u, dtype=float)
        if w.u is not None and w.u.shape != times.shape:
            raise ValidationError("u marks must align with atom times")
        for arr in (w.times, w.marks, w.u):
            if arr is not None:
                arr.setflags(write=False)
        w._atoms = None
        return w

    @property
    def atoms(self) -> tuple[Atom, ...]:
        if self._atoms is None:
            if self.marked:
                assert self.u is not None
                self._atoms = tuple(
                    Atom(float(t), float(z), float(u))
                    for t, z, u in zip(self.times, self.marks, self.u)
                )
            else:
                self._atoms = tuple(
                    Atom(float(t), float(z)) for t, z in zip(self.times, self.marks)
                )
        return self._atoms

    def __len__(self) -> int:
        return int(self.times.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointMeasureWindow):
            return NotImplemented
        if (self.horizon, self.mark_bound, self.marked) != (
            other.horizon,
            other.mark_bound,
            other.marked,
        ):
            return False
        if not (
            np.array_equal(self.times, other.times)
            and np.array_equal(self.marks, other.marks)
        ):
            return False
        if self.marked:
            return np.array_equal(self.u, other.u)
        return True

    def __repr__(self) -> str:
        return (
            f"PointMeasureWindow(horizon={self.horizon}, mark_bound={self.mark_bound}, "
            f"n_atoms={len(self)}, marked={self.marked})"
        )


def _validate_atoms(times: np.ndarray, marks: np.ndarray, horizon: float, mark_bound: float) -> None:
    if times.shape != marks.shape or times.ndim != 1:
        raise ValidationError("atom arrays must be parallel 1-d arrays")
    if times.size == 0:
        return
    if not (np.all(times >= 0.0) and np.all(times <= horizon)):
        raise ValidationError("atom times must lie in [0, horizon]")
    if not (np.all(marks >= 0.0) and np.all(marks <= mark_bound)):
        raise ValidationError("atom marks must lie in [0, mark_bound]")
    dt = np.diff(times)
    dz = np.diff(marks)
    if not np.all((dt > 0.0) | ((dt == 0.0) & (dz > 0.0))):
        raise ValidationError("atoms must be sorted strictly by (t, z)")


@dataclass(frozen=True)
class Rectangle:
    """Axis rectangle [t0, t1) x [z0, z1], half-open in time, closed in mark."""

    t0: float
    t1: float
    z0: float
    z1: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.t0 <= self.t1):
            raise ValidationError("rectangle needs 0 <= t0 <= t1")
        if not (0.0 <= self.z0 <= self.z1):
            raise ValidationError("rectangle needs 0 <= z0 <= z1")


@dataclass(frozen=True)
class AtomMatching:
    """Bijection between two equal-count atom sets.

    permutation[i] is the 0-based index in the second set matched to atom i of
    the first; max_displacement is the largest sup-norm move any atom makes.
    """

    permutation: tuple[int, ...]
    max_displacement: float


def sample_window(
    horizon: float,
    mark_bound: float,
    marked: bool = False,
    rng: RngStream | None = None,
) -> PointMeasureWindow:
    """Exact draw of a unit-intensity Poisson measure on the window.

    Renewal form: interarrival times Exponential(mark_bound) accumulated until
    they pass the horizon, marks Uniform[0, mark_bound], jump marks standard
    normal when requested; the three families are independent.  A zero mark
    bound yields the empty window.
    """
    horizon = float(horizon)
    mark_bound = float(mark_bound)
    if not horizon > 0.0:
        raise ValidationError("sample_window requires horizon > 0")
    if mark_bound < 0.0:
        raise ValidationError("sample_window requires mark_bound >= 0")
    if rng is None:
        raise ValidationError("sample_window requires an RngStream")
    if mark_bound == 0.0:
        return PointMeasureWindow.from_arrays(
            horizon, mark_bound, np.empty(0), np.empty(0), np.empty(0) if marked else None
        )
    gen = rng.generator()
    rate = mark_bound
    mean_n = rate * horizon
    block = max(8, int(mean_n + 6.0 * np.sqrt(mean_n) + 8.0))
    chunks: list[np.ndarray] = []
    offset = 0.0
    while True:
        cum = offset + np.cumsum(gen.exponential(1.0 / rate, size=block))
        chunks.append(cum[cum <= horizon])
        if cum[-1] > horizon:
            break
        offset = float(cum[-1])
    times = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
    n = times.size
    marks = gen.uniform(0.0, mark_bound, size=n)
    u = gen.standard_normal(n) if marked else None
    return PointMeasureWindow.from_arrays(horizon, mark_bound, times, marks, u)


def extend_window(
    w: PointMeasureWindow, new_bound: float, rng: RngStream
) -> PointMeasureWindow:
    """Superpose an independent strip [0,T] x (old bound, new_bound].

    The result is distributed as a window sampled directly at the larger
    bound; atoms of `w` are carried over unchanged, so any thinning decision
    made below the old bound is unaffected.
    """
    new_bound = float(new_bound)
    if new_bound <= w.mark_bound:
        raise ValidationError("extend_window requires new_bound > current bound")
    strip = sample_window(w.horizon, new_bound - w.mark_bound, w.marked, rng)
    s_marks = strip.marks + w.mark_bound
    times = np.concatenate([w.times, strip.times])
    marks = np.concatenate([w.marks, s_marks])
    order = np.lexsort((marks, times))
    u = None
    if w.marked:
        assert w.u is not None and strip.u is not None
        u = np.concatenate([w.u, strip.u])[order]
    return PointMeasureWindow.from_arrays(
        w.horizon, new_bound, times[order], marks[order], u
    )


def count(w: PointMeasureWindow, r: Rectangle) -> int:
    """Number of atoms in r; errors if r is not contained in the window."""
    if r.t1 > w.horizon or r.z1 > w.mark_bound:
        raise ValidationError("rectangle exceeds the sampled window")
    mask = (w.times >= r.t0) & (w.times < r.t1) & (w.marks >= r.z0) & (w.marks <= r.z1)
    return int(np.count_nonzero(mask))


def is_simple(w: PointMeasureWindow) -> bool:
    """True when no two atoms share a time coordinate."""
    if len(w) < 2:
        return True
    return bool(np.all(np.diff(w.times) > 0.0))


def restrict(
    w: PointMeasureWindow, horizon: float, mark_bound: float
) -> PointMeasureWindow:
    """Sub-window keeping atoms with t < horizon and z <= mark_bound."""
    horizon = float(horizon)
    mark_bound = float(mark_bound)
    if horizon > w.horizon or mark_bound > w.mark_bound:
        raise ValidationError("restrict cannot enlarge a window")
    keep = (w.times < horizon) & (w.marks <= mark_bound)
    u = w.u[keep] if w.marked else None
    return PointMeasureWindow.from_arrays(
        horizon, mark_bound, w.times[keep], w.marks[keep], u
    )


def _perfect_matching_exists(
    cost: np.ndarray, threshold: float, rows: Sequence[int], cols_free: Sequence[int]
) -> bool:
    """Kuhn augmenting-path feasibility for edges with cost <= threshold."""
    col_list = list(cols_free)
    col_pos = {c: k for k, c in enumerate(col_list)}
    match_of_col: list[int | None] = [None] * len(col_list)

    def augment(r: int, seen: list[bool]) -> bool:
        for c in col_list:
            k = col_pos[c]
            if seen[k] or cost[r, c] > threshold:
                continue
            seen[k] = True
            owner = match_of_col[k]
            if owner is None or augment(owner, seen):
                match_of_col[k] = r
                return True
        return False

    if len(rows) > len(col_list):
        return False
    for r in rows:
        if not augment(r, [False] * len(col_list)):
            return False
    return True


def match_atoms(a: PointMeasureWindow, b: PointMeasureWindow) -> AtomMatching:
    """Bottleneck-optimal pairing of two equal-count atom sets.

    Minimizes the maximum sup-norm displacement max(|dt|, |dz|) over all
    bijections; among optimal bijections the lexicographically smallest
    permutation is returned.  Atom counts must agree.
    """
    n = len(a)
    if n != len(b):
        raise ValidationError("match_atoms requires equal atom counts")
    if n == 0:
        return AtomMatching((), 0.0)
    dt = np.abs(a.times[:, None] - b.times[None, :])
    dz = np.abs(a.marks[:, None] - b.marks[None, :])
    cost = np.maximum(dt, dz)
    levels = np.unique(cost)
    all_rows = list(range(n))
    all_cols = list(range(n))
    lo, hi = 0, levels.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _perfect_matching_exists(cost, float(levels[mid]), all_rows, all_cols):
            hi = mid
        else:
            lo = mid + 1
    best = float(levels[lo])
    # Lexicographic tie-break: fix rows in order, always taking the smallest
    # column that keeps the remainder feasible at the bottleneck value.
    perm: list[int] = []
    free = list(range(n))
    for r in range(n):
        rest = list(range(r + 1, n))
        chosen = None
        for c in free:
            if cost[r, c] > best:
                continue
            remaining = [x for x in free if x != c]
            if _perfect_matching_exists(cost, best, rest, remaining):
                chosen = c
                break
        if chosen is None:  # cannot happen: best is feasible
            raise RuntimeError("bottleneck matching lost feasibility")
        perm.append(chosen)
        free.remove(chosen)
    return AtomMatching(tuple(perm), best)


def _fmt(x: float) -> str:
    return repr(float(x))


def save_window(w: PointMeasureWindow, path: str) -> None:
    """Write atoms as CSV with header t,z[,u]; rejects non-simple windows."""
    if not is_simple(w):
        raise ValidationError("refusing to store a window with shared atom times")
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        if w.marked:
            assert w.u is not None
            out.writerow(["t", "z", "u"])
            for t, z, u in zip(w.times, w.marks, w.u):
                out.writerow([_fmt(t), _fmt(z), _fmt(u)])
        else:
            out.writerow(["t", "z"])
            for t, z in zip(w.times, w.marks):
                out.writerow([_fmt(t), _fmt(z)])


def load_window(path: str, horizon: float, mark_bound: float) -> PointMeasureWindow:
    """Read a window CSV back; all invariants plus simplicity are re-checked."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] not in (["t", "z"], ["t", "z", "u"]):
        raise ValidationError(f"{path}: expected header t,z or t,z,u")
    marked = rows[0] == ["t", "z", "u"]
    width = 3 if marked else 2
    times: list[float] = []
    marks: list[float] = []
    u: list[float] = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ValidationError(f"{path}: line {i}: expected {width} fields")
        try:
            vals = [float(x) for x in row]
        except ValueError as exc:
            raise ValidationError(f"{path}: line {i}: {exc}") from exc
        times.append(vals[0])
        marks.append(vals[1])
        if marked:
            u.append(vals[2])
    w = PointMeasureWindow.from_arrays(
        horizon,
        mark_bound,
        np.asarray(times),
        np.asarray(marks),
        np.asarray(u) if marked else None,
    )
    if not is_simple(w):
        raise ValidationError(f"{path}: window has shared atom times")
    return w
