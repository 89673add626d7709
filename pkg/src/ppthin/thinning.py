"""Thinning map: counting processes driven by intensity paths and point measures.

Component j of the output jumps by one at each atom (tau, zeta) of measure j
with tau <= T and zeta <= x_j(tau-), the left limit of intensity j.  The
inequality is closed and the left limit is first-class: both matter exactly on
the boundary, which is where the map stops being continuous.  check_conditions
evaluates the four sufficient conditions under which input convergence carries
over to the outputs; it reports violations and never raises.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import MarkBoundError, ValidationError
from .paths import GridPath, Path, PathVector, StepPath, _segment_values
from .poisson import PointMeasureWindow

__all__ = ["ThinningInput", "ContinuityReport", "phi", "check_conditions"]


def _left_values(p: Path, ts: np.ndarray) -> np.ndarray:
    """Vectorized left limits with value(0-) := value(0)."""
    if isinstance(p, StepPath):
        idx = np.searchsorted(p.jump_times, ts, side="left") - 1
        full = np.concatenate([[p.initial_value], p.jump_values])
        return full[idx + 1]
    return p.eval_left_many(ts)


@dataclass(frozen=True)
class ThinningInput:
    """m intensity paths, m point-measure windows, one evaluation horizon.

    The horizon must not exceed any path or window horizon, intensities must
    be nonnegative on [0, horizon], and each window's mark bound must dominate
    the sup of its intensity there (silent truncation of the intensity is the
    one error this construction must never commit).
    """

    intensities: tuple[Path, ...]
    measures: tuple[PointMeasureWindow, ...]
    horizon: float

    def __init__(
        self,
        intensities: Sequence[Path],
        measures: Sequence[PointMeasureWindow],
        horizon: float,
    ) -> None:
        object.__setattr__(self, "intensities", tuple(intensities))
        object.__setattr__(self, "measures", tuple(measures))
        object.__setattr__(self, "horizon", float(horizon))
        if not self.intensities:
            raise ValidationError("thinning needs at least one component")
        if len(self.intensities) != len(self.measures):
            raise ValidationError("need one measure per intensity")
        if not self.horizon > 0.0:
            raise ValidationError("thinning horizon must be positive")
        for j, (x, w) in enumerate(zip(self.intensities, self.measures)):
            if x.horizon < self.horizon or w.horizon < self.horizon:
                raise ValidationError(f"component {j}: horizon exceeds path or window")
            bps, vals = _segment_values(x)
            vals = vals[bps <= self.horizon]
            if np.any(vals < 0.0):
                raise ValidationError(f"component {j}: intensity is negative on [0, T]")
            sup = float(np.max(vals))
            if w.mark_bound < sup:
                raise MarkBoundError(
                    f"component {j}: mark bound {w.mark_bound} below intensity sup {sup}"
                )

    @property
    def m(self) -> int:
        return len(self.intensities)


def phi(inp: ThinningInput) -> PathVector:
    """Apply the thinning map; returns the vector of counting paths on [0, T]."""
    out: list[StepPath] = []
    for j, (x, w) in enumerate(zip(inp.intensities, inp.measures)):
        in_horizon = w.times <= inp.horizon
        ts = w.times[in_horizon]
        zs = w.marks[in_horizon]
        accepted = ts[zs <= _left_values(x, ts)]
        if accepted.size and accepted[0] == 0.0:
            raise ValidationError(
                f"component {j}: accepted atom at time 0 cannot start a counting path"
            )
        if accepted.size >= 2 and np.any(np.diff(accepted) == 0.0):
            raise ValidationError(
                f"component {j}: measure accepts two atoms at one time; counting path undefined"
            )
        values = np.arange(1, accepted.size + 1, dtype=float)
        out.append(StepPath.from_arrays(0.0, accepted, values, inp.horizon))
    return PathVector(out)


@dataclass(frozen=True)
class ContinuityReport:
    """Outcome of the four sufficient conditions for continuity of the map.

    a: each measure is simple;
    b: no atom time is shared by two different measures;
    c: no atom of measure j sits at a discontinuity time of intensity j;
    d: no atom of measure j sits exactly on the left-limit graph of intensity j.
    Each violations tuple is nonempty exactly when its flag is False.
    """

    condition_a: bool
    condition_b: bool
    condition_c: bool
    condition_d: bool
    violations_a: tuple = field(default=())
    violations_b: tuple = field(default=())
    violations_c: tuple = field(default=())
    violations_d: tuple = field(default=())

    def __post_init__(self) -> None:
        for flag, viol in (
            (self.condition_a, self.violations_a),
            (self.condition_b, self.violations_b),
            (self.condition_c, self.violations_c),
            (self.condition_d, self.violations_d),
        ):
            if flag == bool(viol):
                raise ValidationError("violation list must be nonempty exactly when the flag is False")

    @property
    def all_ok(self) -> bool:
        return self.condition_a and self.condition_b and self.condition_c and self.condition_d

    def to_dict(self) -> dict:
        return {
            "condition_a": self.condition_a,
            "condition_b": self.condition_b,
            "condition_c": self.condition_c,
            "condition_d": self.condition_d,
            "violations_a": [list(v) for v in self.violations_a],
            "violations_b": [list(v) for v in self.violations_b],
            "violations_c": [list(v) for v in self.violations_c],
            "violations_d": [list(v) for v in self.violations_d],
            "all_ok": self.all_ok,
        }


def check_conditions(inp: ThinningInput) -> ContinuityReport:
    """Evaluate conditions (a)-(d) on [0, horizon]; reports, never raises."""
    viol_a: list[tuple[int, float]] = []
    viol_b: list[tuple[float, int, int]] = []
    viol_c: list[tuple[int, float]] = []
    viol_d: list[tuple[int, float, float]] = []

    clipped: list[tuple[np.ndarray, np.ndarray]] = []
    for w in inp.measures:
        keep = w.times <= inp.horizon
        clipped.append((w.times[keep], w.marks[keep]))

    for j, (ts, _) in enumerate(clipped):
        if ts.size >= 2:
            dup = np.diff(ts) == 0.0
            for t in np.unique(ts[1:][dup]):
                viol_a.append((j, float(t)))

    if inp.m >= 2:
        owners: dict[float, int] = {}
        for j, (ts, _) in enumerate(clipped):
            for t in np.unique(ts):
                t = float(t)
                if t in owners and owners[t] != j:
                    viol_b.append((t, owners[t], j))
                else:
                    owners.setdefault(t, j)

    for j, (x, (ts, zs)) in enumerate(zip(inp.intensities, clipped)):
        disc = x.restricted(inp.horizon).discontinuity_times()
        if disc.size and ts.size:
            hits = np.isin(ts, disc)
            for t in np.unique(ts[hits]):
                viol_c.append((j, float(t)))
        if ts.size:
            on_graph = zs == _left_values(x, ts)
            for t, z in zip(ts[on_graph], zs[on_graph]):
                viol_d.append((j, float(t), float(z)))

    return ContinuityReport(
        condition_a=not viol_a,
        condition_b=not viol_b,
        condition_c=not viol_c,
        condition_d=not viol_d,
        violations_a=tuple(viol_a),
        violations_b=tuple(viol_b),
        violations_c=tuple(viol_c),
        violations_d=tuple(viol_d),
    )
