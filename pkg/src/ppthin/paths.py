"""Piecewise-constant cadlag paths on [0, T] with first-class left limits.

Two representations: StepPath holds an initial value plus (time, new value)
jumps at strictly increasing times in (0, T]; GridPath holds one value per
cell [kh, (k+1)h) of a uniform grid.  Both evaluate right-continuously, expose
exact left limits, and share exact sup-norm and distance computations that
enumerate the finitely many constant segments instead of sampling.
"""

from __future__ import annotations

import csv
import math
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import (
    CoincidentJumpTimesError,
    JumpCountMismatchError,
    ValidationError,
)

__all__ = [
    "StepPath",
    "GridPath",
    "TimeChange",
    "PathVector",
    "Path",
    "sup_norm",
    "uniform_distance",
    "skorohod_upper_distance",
    "time_changed",
    "as_step",
    "save_path",
    "load_path",
]


def _check_domain(t: float, lo: float, hi: float, what: str) -> None:
    if not (lo <= t <= hi):
        raise ValidationError(f"{what}: query {t} outside [{lo}, {hi}]")


class StepPath:
    """Right-continuous step function: initial value, then finitely many jumps."""

    __slots__ = ("initial_value", "jump_times", "jump_values", "horizon")

    def __init__(
        self,
        initial_value: float,
        jumps: Iterable[Sequence[float]] = (),
        horizon: float = 1.0,
    ) -> None:
        horizon = float(horizon)
        if horizon < 0.0:
            raise ValidationError("horizon must be nonnegative")
        pairs = [(float(t), float(v)) for t, v in jumps]
        times = np.asarray([t for t, _ in pairs], dtype=float)
        values = np.asarray([v for _, v in pairs], dtype=float)
        if times.size:
            if not np.all(np.diff(times) > 0.0):
                raise ValidationError("jump times must be strictly increasing")
            if times[0] <= 0.0 or times[-1] > horizon:
                raise ValidationError("jump times must lie in (0, horizon]")
        self.initial_value = float(initial_value)
        self.jump_times = times
        self.jump_values = values
        self.horizon = horizon
        times.setflags(write=False)
        values.setflags(write=False)

    @classmethod
    def from_arrays(
        cls, initial_value: float, times: np.ndarray, values: np.ndarray, horizon: float
    ) -> "StepPath":
        p = cls.__new__(cls)
        horizon = float(horizon)
        times = np.ascontiguousarray(times, dtype=float)
        values = np.ascontiguousarray(values, dtype=float)
        if horizon < 0.0:
            raise ValidationError("horizon must be nonnegative")
        if times.shape != values.shape or times.ndim != 1:
            raise ValidationError("jump arrays must be parallel 1-d arrays")
        if times.size:
            if not np.all(np.diff(times) > 0.0):
                raise ValidationError("jump times must be strictly increasing")
            if times[0] <= 0.0 or times[-1] > horizon:
                raise ValidationError("jump times must lie in (0, horizon]")
        p.initial_value = float(initial_value)
        p.jump_times = times
        p.jump_values = values
        p.horizon = horizon
        times.setflags(write=False)
        values.setflags(write=False)
        return p

    def eval(self, t: float) -> float:
        """Value at t (right-continuous)."""
        _check_domain(t, 0.0, self.horizon, "StepPath.eval")
        k = int(np.searchsorted(self.jump_times, t, side="right")) - 1
        return self.initial_value if k < 0 else float(self.jump_values[k])

    def eval_left(self, t: float) -> float:
        """Left limit at t; defined for t in (0, horizon]."""
        if not (0.0 < t <= self.horizon):
            raise ValidationError(f"StepPath.eval_left: query {t} outside (0, {self.horizon}]")
        k = int(np.searchsorted(self.jump_times, t, side="left")) - 1
        return self.initial_value if k < 0 else float(self.jump_values[k])

    def eval_many(self, ts: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.jump_times, ts, side="right") - 1
        full = np.concatenate([[self.initial_value], self.jump_values])
        return full[idx + 1]

    def restricted(self, horizon: float) -> "StepPath":
        """Restriction to [0, horizon] (horizon must not grow)."""
        horizon = float(horizon)
        if horizon > self.horizon:
            raise ValidationError("cannot enlarge a path's horizon")
        keep = self.jump_times <= horizon
        return StepPath.from_arrays(
            self.initial_value, self.jump_times[keep], self.jump_values[keep], horizon
        )

    def map_values(self, fn: Callable[[float], float]) -> "StepPath":
        """Pointwise transform of held values; jump times are unchanged."""
        vals = np.asarray([fn(v) for v in self.jump_values], dtype=float)
        return StepPath.from_arrays(
            float(fn(self.initial_value)), self.jump_times.copy(), vals, self.horizon
        )

    def discontinuity_times(self) -> np.ndarray:
        """Jump times where the held value actually changes."""
        if self.jump_times.size == 0:
            return self.jump_times
        prev = np.concatenate([[self.initial_value], self.jump_values[:-1]])
        return self.jump_times[self.jump_values != prev]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StepPath):
            return NotImplemented
        return (
            self.initial_value == other.initial_value
            and self.horizon == other.horizon
            and np.array_equal(self.jump_times, other.jump_times)
            and np.array_equal(self.jump_values, other.jump_values)
        )

    def __repr__(self) -> str:
        return (
            f"StepPath(initial={self.initial_value}, n_jumps={self.jump_times.size}, "
            f"horizon={self.horizon})"
        )


class GridPath:
    """Piecewise-constant path on a uniform grid: values[k] on [kh, (k+1)h).

    The value count must equal ceil(horizon / h); at the horizon the last
    cell's value is continued so eval(horizon) is defined.
    """

    __slots__ = ("h", "values", "horizon")

    def __init__(self, h: float, values: Sequence[float], horizon: float) -> None:
        h = float(h)
        horizon = float(horizon)
        if h <= 0.0:
            raise ValidationError("grid step h must be positive")
        if horizon < 0.0:
            raise ValidationError("horizon must be nonnegative")
        vals = np.ascontiguousarray(values, dtype=float)
        if vals.ndim != 1:
            raise ValidationError("grid values must be a 1-d array")
        if vals.size != _n_cells(horizon, h):
            raise ValidationError(
                f"grid needs ceil(horizon/h) = {_n_cells(horizon, h)} values, got {vals.size}"
            )
        self.h = h
        self.values = vals
        self.horizon = horizon
        vals.setflags(write=False)

    def _cell(self, t: float) -> int:
        k = int(math.floor(t / self.h))
        n = self.values.size
        if k >= n:
            k = n - 1
        if k < 0:
            k = 0
        return k

    def eval(self, t: float) -> float:
        """Value at t (right-continuous; the last cell extends to the horizon)."""
        _check_domain(t, 0.0, self.horizon, "GridPath.eval")
        if self.values.size == 0:
            raise ValidationError("cannot evaluate an empty grid path")
        return float(self.values[self._cell(t)])

    def eval_left(self, t: float) -> float:
        """Left limit at t; at an interior grid point, the preceding cell."""
        if not (0.0 < t <= self.horizon):
            raise ValidationError(f"GridPath.eval_left: query {t} outside (0, {self.horizon}]")
        if self.values.size == 0:
            raise ValidationError("cannot evaluate an empty grid path")
        k = self._cell(t)
        if k >= 1 and t == k * self.h:
            return float(self.values[k - 1])
        return float(self.values[k])

    def eval_left_many(self, ts: np.ndarray) -> np.ndarray:
        ks = np.floor(ts / self.h).astype(int)
        ks = np.clip(ks, 0, self.values.size - 1)
        on_boundary = (ks >= 1) & (ts == ks * self.h)
        ks = np.where(on_boundary, ks - 1, ks)
        return self.values[ks]

    def restricted(self, horizon: float) -> "GridPath":
        horizon = float(horizon)
        if horizon > self.horizon:
            raise ValidationError("cannot enlarge a path's horizon")
        return GridPath(self.h, self.values[: _n_cells(horizon, self.h)], horizon)

    def map_values(self, fn: Callable[[np.ndarray], np.ndarray]) -> "GridPath":
        """Pointwise transform; fn must accept a float array."""
        return GridPath(self.h, np.asarray(fn(self.values), dtype=float), self.horizon)

    def discontinuity_times(self) -> np.ndarray:
        """Interior cell boundaries k*h where adjacent values differ."""
        if self.values.size < 2:
            return np.empty(0)
        ks = np.nonzero(self.values[1:] != self.values[:-1])[0] + 1
        return ks * self.h

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridPath):
            return NotImplemented
        return (
            self.h == other.h
            and self.horizon == other.horizon
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"GridPath(h={self.h}, n_cells={self.values.size}, horizon={self.horizon})"


Path = Union[StepPath, GridPath]


def _n_cells(horizon: float, h: float) -> int:
    # ceil with a snap so horizons assembled as k*h do not gain a phantom cell
    q = horizon / h
    r = round(q)
    if abs(q - r) <= 1e-9 * max(1.0, abs(q)):
        return int(r)
    return int(math.ceil(q))


def left_value(p: Path, t: float) -> float:
    """Left limit, with the usual convention value(0-) := value(0)."""
    if t == 0.0:
        return p.eval(0.0)
    return p.eval_left(t)


class TimeChange:
    """Increasing piecewise-linear bijection of [0, T] onto itself."""

    __slots__ = ("knots_s", "knots_y")

    def __init__(self, knots: Iterable[Sequence[float]]) -> None:
        pts = [(float(s), float(y)) for s, y in knots]
        if len(pts) < 2:
            raise ValidationError("time change needs at least the two endpoint knots")
        s = np.asarray([p[0] for p in pts], dtype=float)
        y = np.asarray([p[1] for p in pts], dtype=float)
        if not (np.all(np.diff(s) > 0.0) and np.all(np.diff(y) > 0.0)):
            raise ValidationError("time-change knots must increase strictly in both coordinates")
        if s[0] != 0.0 or y[0] != 0.0:
            raise ValidationError("time change must fix 0")
        if s[-1] != y[-1]:
            raise ValidationError("time change must fix the horizon")
        self.knots_s = s
        self.knots_y = y
        s.setflags(write=False)
        y.setflags(write=False)

    @property
    def horizon(self) -> float:
        return float(self.knots_s[-1])

    def __call__(self, t: float | np.ndarray) -> float | np.ndarray:
        out = np.interp(t, self.knots_s, self.knots_y)
        return float(out) if np.isscalar(t) else out

    def inverse(self) -> "TimeChange":
        return TimeChange(zip(self.knots_y, self.knots_s))

    def sup_deviation(self) -> float:
        """Exact sup of |lambda(t) - t|; attained at a knot."""
        return float(np.max(np.abs(self.knots_y - self.knots_s)))

    @classmethod
    def identity(cls, horizon: float) -> "TimeChange":
        return cls([(0.0, 0.0), (float(horizon), float(horizon))])


class PathVector:
    """Finite family of paths sharing one horizon."""

    __slots__ = ("components", "horizon")

    def __init__(self, components: Iterable[Path]) -> None:
        comps = tuple(components)
        if not comps:
            raise ValidationError("path vector needs at least one component")
        horizon = comps[0].horizon
        if any(c.horizon != horizon for c in comps):
            raise ValidationError("path vector components must share a horizon")
        self.components = comps
        self.horizon = float(horizon)

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> Path:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)


def _segment_values(p: Path) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints (starting at 0) and the value held from each breakpoint."""
    if isinstance(p, StepPath):
        bps = np.concatenate([[0.0], p.jump_times])
        vals = np.concatenate([[p.initial_value], p.jump_values])
        return bps, vals
    if p.values.size == 0:
        raise ValidationError("empty grid path has no segments")
    bps = np.arange(p.values.size) * p.h
    return bps, p.values


def sup_norm(p: Path, upto: float | None = None) -> float:
    """Exact sup of |p| over [0, upto] (default: the whole horizon)."""
    upto = p.horizon if upto is None else float(upto)
    _check_domain(upto, 0.0, p.horizon, "sup_norm")
    bps, vals = _segment_values(p)
    keep = bps <= upto
    return float(np.max(np.abs(vals[keep])))


def uniform_distance(p1: Path, p2: Path, upto: float | None = None) -> float:
    """Exact sup of |p1 - p2| over [0, upto]; horizons must agree."""
    if p1.horizon != p2.horizon:
        raise ValidationError("uniform_distance requires a common horizon")
    upto = p1.horizon if upto is None else float(upto)
    _check_domain(upto, 0.0, p1.horizon, "uniform_distance")
    bps1, _ = _segment_values(p1)
    bps2, _ = _segment_values(p2)
    pts = np.unique(np.concatenate([bps1, bps2, [upto]]))
    pts = pts[pts <= upto]
    v1 = np.asarray([p1.eval(t) for t in pts])
    v2 = np.asarray([p2.eval(t) for t in pts])
    return float(np.max(np.abs(v1 - v2)))


def as_step(p: Path) -> StepPath:
    """Equivalent StepPath (grid cells merge into genuine jumps)."""
    if isinstance(p, StepPath):
        return p
    if p.values.size == 0:
        return StepPath(0.0, (), p.horizon)
    change = np.nonzero(p.values[1:] != p.values[:-1])[0] + 1
    times = change * p.h
    return StepPath.from_arrays(float(p.values[0]), times, p.values[change], p.horizon)


def time_changed(p: Path, lam: TimeChange) -> StepPath:
    """The path t -> p(lambda(t)); jumps move to the preimages of lambda."""
    if lam.horizon != p.horizon:
        raise ValidationError("time change horizon must match the path")
    sp = as_step(p)
    inv = lam.inverse()
    new_times = np.asarray([inv(t) for t in sp.jump_times], dtype=float)
    return StepPath.from_arrays(sp.initial_value, new_times, sp.jump_values, sp.horizon)


def _merged_jump_times(g: PathVector) -> np.ndarray:
    """All components' discontinuity times, sorted; duplicates are an error."""
    all_times = [as_step(c).jump_times for c in g.components]
    merged = np.concatenate(all_times) if all_times else np.empty(0)
    merged = np.sort(merged)
    if merged.size >= 2 and np.any(np.diff(merged) == 0.0):
        raise CoincidentJumpTimesError(
            "components share a jump time; the time-change alignment is undefined"
        )
    if merged.size and merged[-1] >= g.horizon:
        raise ValidationError("cannot align a jump at the horizon")
    return merged


def skorohod_upper_distance(g1: PathVector, g2: PathVector) -> tuple[float, TimeChange]:
    """Upper bound of the J1 distance via one explicit time change.

    Builds the piecewise-linear lambda carrying the merged, sorted jump times
    of g1 onto those of g2 and returns
    max(sup|lambda - id|, sup|g1 - g2 o lambda|) together with lambda.  Both
    vectors need the same horizon and component count, equal per-component
    jump counts, and (within each vector) no jump time shared across
    components.
    """
    if g1.horizon != g2.horizon:
        raise ValidationError("path vectors must share a horizon")
    if len(g1) != len(g2):
        raise ValidationError("path vectors must have the same component count")
    steps1 = [as_step(c) for c in g1.components]
    steps2 = [as_step(c) for c in g2.components]
    for j, (a, b) in enumerate(zip(steps1, steps2)):
        if a.jump_times.size != b.jump_times.size:
            raise JumpCountMismatchError(
                f"component {j}: {a.jump_times.size} vs {b.jump_times.size} jumps"
            )
    u = _merged_jump_times(g1)
    v = _merged_jump_times(g2)
    T = g1.horizon
    knots = [(0.0, 0.0)]
    knots += [(float(a), float(b)) for a, b in zip(u, v)]
    knots.append((T, T))
    lam = TimeChange(knots)
    d_time = lam.sup_deviation()
    pts1 = np.concatenate([[0.0], u])
    pts2 = np.concatenate([[0.0], v])
    resid = 0.0
    for a, b in zip(steps1, steps2):
        va = a.eval_many(pts1)
        vb = b.eval_many(pts2)
        resid = max(resid, float(np.max(np.abs(va - vb))))
    return max(d_time, resid), lam


def _fmt(x: float) -> str:
    return repr(float(x))


def save_path(p: Path, path: str) -> None:
    """Write a path CSV; kind line first, then the representation rows."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        if isinstance(p, StepPath):
            out.writerow(["kind", "step"])
            out.writerow(["horizon", _fmt(p.horizon)])
            out.writerow(["t", "value"])
            out.writerow([_fmt(0.0), _fmt(p.initial_value)])
            for t, v in zip(p.jump_times, p.jump_values):
                out.writerow([_fmt(t), _fmt(v)])
        else:
            out.writerow(["kind", "grid"])
            out.writerow(["horizon", _fmt(p.horizon)])
            out.writerow(["h", _fmt(p.h)])
            out.writerow(["value"])
            for v in p.values:
                out.writerow([_fmt(v)])


def load_path(path: str) -> Path:
    """Read a path CSV written by save_path; invariants are re-validated."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) != 2 or rows[0][0] != "kind":
        raise ValidationError(f"{path}: expected a kind header line")
    kind = rows[0][1]
    try:
        if kind == "step":
            if rows[1][0] != "horizon" or rows[2] != ["t", "value"]:
                raise ValidationError(f"{path}: malformed step path header")
            horizon = float(rows[1][1])
            body = rows[3:]
            if not body or float(body[0][0]) != 0.0:
                raise ValidationError(f"{path}: step path must start with its t=0 value")
            initial = float(body[0][1])
            jumps = [(float(r[0]), float(r[1])) for r in body[1:]]
            return StepPath(initial, jumps, horizon)
        if kind == "grid":
            if rows[1][0] != "horizon" or rows[2][0] != "h" or rows[3] != ["value"]:
                raise ValidationError(f"{path}: malformed grid path header")
            horizon = float(rows[1][1])
            h = float(rows[2][1])
            values = [float(r[0]) for r in rows[4:]]
            return GridPath(h, values, horizon)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{path}: malformed path file: {exc}") from exc
    raise ValidationError(f"{path}: unknown path kind {kind!r}")
