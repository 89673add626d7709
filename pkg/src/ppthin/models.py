"""Model systems driven by thinned point measures, with their scaling limits.

Three families, each with a particle system and the object it converges to:

* a mean-field diffusive system whose intensity 1 + X^2 feeds back through
  normally marked jumps of size u/sqrt(N), with an Euler-Maruyama diffusion
  limit;
* a square-root Volterra system convolving a power kernel against its own
  compensated jumps, rescaled in space-time, with an Euler scheme for the
  stochastic Volterra limit;
* a Hawkes-type mean-field system where N particles share the empirical
  kernel average, coupled pathwise to its deterministic Volterra limit by
  thinning the *same* windows with both intensities.

Simulation conventions: exact event-driven stepping where the intensity has a
closed decay form, otherwise a uniform grid with the left-endpoint (cadlag
left-limit) convention everywhere a quadrature or a thinning threshold is
needed.  Grid-intensity simulators are bitwise re-verifiable through
`thinning.phi`; the exact-decay diffusive prelimit is replay-verified from
its recorded candidate table instead (`reverify`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import BoundOverflowError, ValidationError
from .paths import GridPath, Path, PathVector, StepPath, _n_cells
from .poisson import PointMeasureWindow, extend_window, sample_window
from .rng import RngStream
from .thinning import ThinningInput, phi

__all__ = [
    "ExponentialKernel",
    "PowerKernel",
    "TabulatedKernel",
    "parse_kernel",
    "AffineRate",
    "ConstRate",
    "SigmoidRate",
    "parse_rate_fn",
    "MeanFieldDiffusiveConfig",
    "VolterraConfig",
    "HawkesMeanFieldConfig",
    "SimulationOutput",
    "CoupledSimulationOutput",
    "simulate_meanfield_prelimit",
    "simulate_meanfield_limit",
    "simulate_volterra_prelimit",
    "simulate_volterra_limit",
    "solve_volterra_deterministic",
    "simulate_hawkes_coupled",
    "reverify",
]


# ---------------------------------------------------------------------------
# kernels and rate functions


@dataclass(frozen=True)
class ExponentialKernel:
    """K(u) = exp(-beta u)."""

    beta: float

    def __post_init__(self) -> None:
        if self.beta < 0.0:
            raise ValidationError("exponential kernel needs beta >= 0")

    def __call__(self, u):
        return np.exp(-self.beta * np.asarray(u, dtype=float))

    def descriptor(self) -> str:
        return f"exp:{self.beta!r}"


@dataclass(frozen=True)
class PowerKernel:
    """K(u) = u**gamma, gamma > 0 (so K(0) = 0)."""

    gamma: float

    def __post_init__(self) -> None:
        if self.gamma <= 0.0:
            raise ValidationError("power kernel needs gamma > 0")

    def __call__(self, u):
        return np.power(np.asarray(u, dtype=float), self.gamma)

    def descriptor(self) -> str:
        return f"pow:{self.gamma!r}"


class TabulatedKernel:
    """Kernel given by linear interpolation of (time, value) samples."""

    __slots__ = ("times", "values")

    def __init__(self, times: Sequence[float], values: Sequence[float]) -> None:
        t = np.ascontiguousarray(times, dtype=float)
        v = np.ascontiguousarray(values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValidationError("tabulated kernel needs parallel arrays, length >= 2")
        if t[0] != 0.0 or not np.all(np.diff(t) > 0.0):
            raise ValidationError("tabulated kernel times must increase strictly from 0")
        self.times = t
        self.values = v

    def __call__(self, u):
        return np.interp(np.asarray(u, dtype=float), self.times, self.values)

    def descriptor(self) -> str:
        return f"tabulated:{self.times.size}"


Kernel = Callable[[np.ndarray], np.ndarray]


def parse_kernel(text: str) -> Kernel:
    """Parse 'exp:beta' or 'pow:gamma' kernel descriptors."""
    name, _, arg = text.partition(":")
    try:
        if name == "exp":
            return ExponentialKernel(float(arg))
        if name == "pow":
            return PowerKernel(float(arg))
    except ValueError as exc:
        raise ValidationError(f"bad kernel parameter in {text!r}: {exc}") from exc
    raise ValidationError(f"unknown kernel {text!r} (expected exp:beta or pow:gamma)")


@dataclass(frozen=True)
class AffineRate:
    """f(x) = max(intercept + slope * x, 0)."""

    intercept: float
    slope: float

    def __call__(self, x):
        return np.maximum(self.intercept + self.slope * np.asarray(x, dtype=float), 0.0)

    def descriptor(self) -> str:
        return f"affine:{self.intercept!r},{self.slope!r}"


@dataclass(frozen=True)
class ConstRate:
    """f(x) = value, value >= 0."""

    value: float

    def __post_init__(self) -> None:
        if self.value < 0.0:
            raise ValidationError("constant rate must be nonnegative")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, self.value) if x.ndim else np.float64(self.value)

    def descriptor(self) -> str:
        return f"const:{self.value!r}"


@dataclass(frozen=True)
class SigmoidRate:
    """f(x) = scale / (1 + exp(-slope * x)); bounded and Lipschitz."""

    scale: float
    slope: float

    def __post_init__(self) -> None:
        if self.scale <= 0.0:
            raise ValidationError("sigmoid rate needs scale > 0")

    def __call__(self, x):
        return self.scale / (1.0 + np.exp(-self.slope * np.asarray(x, dtype=float)))

    def descriptor(self) -> str:
        return f"sigmoid:{self.scale!r},{self.slope!r}"


RateFn = Callable[[np.ndarray], np.ndarray]


def parse_rate_fn(text: str) -> RateFn:
    """Parse 'affine:a,b', 'const:c' or 'sigmoid:c,s' rate descriptors."""
    name, _, arg = text.partition(":")
    try:
        parts = [float(p) for p in arg.split(",")] if arg else []
        if name == "affine" and len(parts) == 2:
            return AffineRate(parts[0], parts[1])
        if name == "const" and len(parts) == 1:
            return ConstRate(parts[0])
        if name == "sigmoid" and len(parts) == 2:
            return SigmoidRate(parts[0], parts[1])
    except ValueError as exc:
        raise ValidationError(f"bad rate parameter in {text!r}: {exc}") from exc
    raise ValidationError(
        f"unknown rate function {text!r} (expected affine:a,b, const:c or sigmoid:c,s)"
    )


# ---------------------------------------------------------------------------
# configurations and outputs


@dataclass(frozen=True)
class MeanFieldDiffusiveConfig:
    """Mean-field diffusive system: N particles, decay alpha, intensity 1 + X^2."""

    alpha: float
    N: int
    T: float
    n_obs: int = 1
    seed: RngStream = field(default_factory=lambda: RngStream(0))

    def __post_init__(self) -> None:
        if self.alpha <= 0.0:
            raise ValidationError("alpha must be positive")
        if self.N < 1:
            raise ValidationError("N must be >= 1")
        if self.T < 0.0:
            raise ValidationError("T must be nonnegative")
        if not (1 <= self.n_obs <= self.N):
            raise ValidationError("need 1 <= n_obs <= N")


@dataclass(frozen=True)
class VolterraConfig:
    """Square-root Volterra system with kernel (u/N)**gamma on [0, N*T].

    `mu` is a baseline rate added to the thinning intensity |X| (and to the
    compensator, keeping the compensated structure); mu = 0 reproduces the
    literal system, which never leaves 0.
    """

    gamma: float
    N: int
    T: float
    h: float
    mu: float = 1.0
    seed: RngStream = field(default_factory=lambda: RngStream(0))
    bound_ceiling: float = 1e6
    freeze_feedback: bool = False

    def __post_init__(self) -> None:
        if self.gamma <= 0.0:
            raise ValidationError("gamma must be positive")
        if self.N < 1:
            raise ValidationError("N must be >= 1")
        if self.T < 0.0:
            raise ValidationError("T must be nonnegative")
        if self.h <= 0.0:
            raise ValidationError("h must be positive")
        if self.mu < 0.0:
            raise ValidationError("mu must be nonnegative")
        if self.bound_ceiling <= 0.0:
            raise ValidationError("bound ceiling must be positive")


@dataclass(frozen=True)
class HawkesMeanFieldConfig:
    """Hawkes-type mean-field system: intensity f of the empirical kernel average."""

    kernel: Kernel
    rate_fn: RateFn
    N: int
    T: float
    h: float
    n_obs: int = 1
    seed: RngStream = field(default_factory=lambda: RngStream(0))
    bound_ceiling: float = 1e6

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValidationError("N must be >= 1")
        if self.T < 0.0:
            raise ValidationError("T must be nonnegative")
        if self.h <= 0.0:
            raise ValidationError("h must be positive")
        if not (1 <= self.n_obs <= self.N):
            raise ValidationError("need 1 <= n_obs <= N")
        if self.bound_ceiling <= 0.0:
            raise ValidationError("bound ceiling must be positive")


@dataclass
class SimulationOutput:
    """One simulated system: its state path, counting paths, and provenance.

    diagnostics is a plain dict of counters, effective bounds and any
    replay/re-verification payload the specific model records.
    """

    intensity_path: Path
    counting_paths: PathVector
    windows_used: tuple[PointMeasureWindow, ...]
    diagnostics: dict


@dataclass
class CoupledSimulationOutput:
    """Prelimit and limit driven by the same windows (pathwise coupling)."""

    prelimit: SimulationOutput
    limit: SimulationOutput

    @property
    def windows_used(self) -> tuple[PointMeasureWindow, ...]:
        return self.prelimit.windows_used


def _empty_output(n_paths: int, model: str) -> SimulationOutput:
    zero = StepPath(0.0, (), 0.0)
    return SimulationOutput(
        intensity_path=zero,
        counting_paths=PathVector([StepPath(0.0, (), 0.0) for _ in range(n_paths)]),
        windows_used=(),
        diagnostics={"model": model, "n_events": 0},
    )


# ---------------------------------------------------------------------------
# mean-field diffusive system


def simulate_meanfield_prelimit(c: MeanFieldDiffusiveConfig) -> SimulationOutput:
    """Exact event-driven run of the N-particle diffusive system.

    Between events X decays as X exp(-alpha dt) in closed form, so 1 + X^2
    immediately after an event bounds the intensity until the next one; the
    bound is retightened at every candidate.  Candidates arrive at rate
    N * bound; an accepted candidate belongs to a uniformly chosen particle
    and moves X by u / sqrt(N) with u standard normal.  The recorded state
    path holds post-event values; the exact decayed left limits live in the
    candidate table under diagnostics["replay"].
    """
    if c.T == 0.0:
        out = _empty_output(c.n_obs, "meanfield_prelimit")
        out.diagnostics.update({"alpha": c.alpha, "N": c.N})
        return out
    gen = c.seed.generator()
    sqrt_n = math.sqrt(c.N)
    t_event = 0.0
    x_event = 0.0
    bound = 1.0
    t_now = 0.0
    cand_t: list[float] = []
    cand_bound: list[float] = []
    cand_lam: list[float] = []
    cand_z: list[float] = []
    cand_acc: list[bool] = []
    ev_t: list[float] = []
    ev_j: list[int] = []
    ev_u: list[float] = []
    ev_x_before: list[float] = []
    ev_x_after: list[float] = []
    while True:
        gap = gen.exponential(1.0 / (c.N * bound))
        t_now = t_now + gap
        if t_now > c.T:
            break
        x_left = x_event * math.exp(-c.alpha * (t_now - t_event))
        lam = 1.0 + x_left * x_left
        z = gen.uniform(0.0, bound)
        accept = z <= lam
        cand_t.append(t_now)
        cand_bound.append(bound)
        cand_lam.append(lam)
        cand_z.append(z)
        cand_acc.append(accept)
        if accept:
            j = int(gen.integers(0, c.N))
            u = float(gen.standard_normal())
            x_new = x_left + u / sqrt_n
            ev_t.append(t_now)
            ev_j.append(j)
            ev_u.append(u)
            ev_x_before.append(x_left)
            ev_x_after.append(x_new)
            t_event = t_now
            x_event = x_new
            bound = 1.0 + x_new * x_new
        else:
            # decayed value is a tighter valid bound from here on
            bound = lam
    ev_t_arr = np.asarray(ev_t)
    ev_j_arr = np.asarray(ev_j, dtype=int)
    counting = []
    for i in range(c.n_obs):
        mine = ev_t_arr[ev_j_arr == i] if ev_t_arr.size else np.empty(0)
        vals = np.arange(1, mine.size + 1, dtype=float)
        counting.append(StepPath.from_arrays(0.0, mine, vals, c.T))
    state = StepPath.from_arrays(0.0, ev_t_arr, np.asarray(ev_x_after), c.T)
    diag = {
        "model": "meanfield_prelimit",
        "alpha": c.alpha,
        "N": c.N,
        "n_candidates": len(cand_t),
        "n_events": len(ev_t),
        "n_rejected": len(cand_t) - len(ev_t),
        "max_bound": max(cand_bound) if cand_bound else 1.0,
        "replay": {
            "cand_t": np.asarray(cand_t),
            "cand_bound": np.asarray(cand_bound),
            "cand_lambda": np.asarray(cand_lam),
            "cand_z": np.asarray(cand_z),
            "cand_accepted": np.asarray(cand_acc, dtype=bool),
            "event_j": ev_j_arr,
            "event_u": np.asarray(ev_u),
            "event_x_before": np.asarray(ev_x_before),
            "event_x_after": np.asarray(ev_x_after),
        },
    }
    return SimulationOutput(state, PathVector(counting), (), diag)


def _euler_meanfield(alpha: float, h: float, dw: np.ndarray) -> np.ndarray:
    """Euler-Maruyama rows for dX = -alpha X dt + sqrt(1 + X^2) dW."""
    n_paths, m = dw.shape
    x = np.zeros((n_paths, m + 1))
    for k in range(m):
        xk = x[:, k]
        x[:, k + 1] = xk * (1.0 - alpha * h) + np.sqrt(1.0 + xk * xk) * dw[:, k]
    return x


def simulate_meanfield_limit(
    alpha: float, T: float, h: float, seed: RngStream, n_obs: int = 1
) -> SimulationOutput:
    """Euler-Maruyama limit diffusion plus thinned limit counting paths.

    Counting components are produced by the thinning map applied to the grid
    path 1 + X^2 and fresh windows whose stream ids are disjoint from the
    Gaussian stream; setting the mark bound from the realized path maximum is
    legitimate because windows are independent of the Gaussian increments.
    """
    if alpha <= 0.0 or h <= 0.0 or T < 0.0 or n_obs < 1:
        raise ValidationError("need alpha > 0, h > 0, T >= 0, n_obs >= 1")
    n = _n_cells(T, h)
    if n == 0:
        out = _empty_output(n_obs, "meanfield_limit")
        out.diagnostics["alpha"] = alpha
        return out
    dw = seed.split("gauss").generator().standard_normal(n - 1) * math.sqrt(h)
    x = _euler_meanfield(alpha, h, dw[None, :])[0]
    state = GridPath(h, x, T)
    rate = GridPath(h, 1.0 + x * x, T)
    bound = float(np.max(rate.values))
    windows = tuple(
        sample_window(T, bound, False, seed.split("window", i)) for i in range(n_obs)
    )
    z = phi(ThinningInput((rate,) * n_obs, windows, T))
    diag = {
        "model": "meanfield_limit",
        "alpha": alpha,
        "mark_bound": bound,
        "rate_path": rate,
        "n_events": int(sum(p.jump_times.size for p in z)),
    }
    return SimulationOutput(state, z, windows, diag)


# ---------------------------------------------------------------------------
# deterministic Volterra solver and stochastic Volterra limit


def solve_volterra_deterministic(
    kernel: Kernel, rate_fn: RateFn, T: float, h: float
) -> GridPath:
    """Left-endpoint scheme for X(t) = int_0^t K(t - s) f(X(s)) ds.

    X(t_k) = sum_{j<k} K(t_k - t_j) f(X(t_j)) h on the uniform grid; first
    order in h for Lipschitz f and kernels of bounded variation.
    """
    if h <= 0.0 or T < 0.0:
        raise ValidationError("need h > 0 and T >= 0")
    n = _n_cells(T, h)
    x = np.zeros(n)
    if n == 0:
        return GridPath(h, x, T)
    kv = np.concatenate([[0.0], np.asarray(kernel(np.arange(1, n + 1) * h), dtype=float)])
    fx = np.zeros(n)
    fx[0] = float(rate_fn(x[0]))
    for k in range(1, n):
        x[k] = h * float(np.dot(fx[:k], kv[k:0:-1]))
        fx[k] = float(rate_fn(x[k]))
    return GridPath(h, x, T)


def _euler_volterra(kv: np.ndarray, db: np.ndarray, mu: float) -> np.ndarray:
    """Rows of X(t_k) = sum_{j<k} K(t_k - t_j) sqrt(mu + |X(t_j)|) dB_j."""
    n_paths, m = db.shape
    x = np.zeros((n_paths, m + 1))
    s = np.zeros((n_paths, m))
    for k in range(1, m + 1):
        s[:, k - 1] = np.sqrt(mu + np.abs(x[:, k - 1])) * db[:, k - 1]
        x[:, k] = s[:, :k] @ kv[k:0:-1]
    return x


def simulate_volterra_limit(
    gamma: float, T: float, h: float, seed: RngStream, mu: float = 1.0
) -> GridPath:
    """Euler scheme for the square-root Volterra limit with kernel t**gamma.

    The diffusion coefficient is sqrt(mu + |X|), matching the compensated
    noise of the baseline-mu prelimit.  mu = 0 restores the literal scheme
    X(t_k) = sum_{j<k} K(t_k - t_j) sqrt|X(t_j)| dB_j, which (like the
    equation itself, started from 0) never leaves the zero solution.
    """
    if h <= 0.0 or T < 0.0 or mu < 0.0:
        raise ValidationError("need h > 0, T >= 0 and mu >= 0")
    kernel = PowerKernel(gamma)
    n = _n_cells(T, h)
    if n == 0:
        return GridPath(h, np.zeros(0), T)
    kv = np.concatenate([[0.0], kernel(np.arange(1, n + 1) * h)])
    db = seed.generator().standard_normal(n - 1) * math.sqrt(h)
    x = _euler_volterra(kv, db[None, :], mu)[0]
    return GridPath(h, x, T)


# ---------------------------------------------------------------------------
# square-root Volterra prelimit


def simulate_volterra_prelimit(c: VolterraConfig) -> SimulationOutput:
    """Grid thinning run of the square-root Volterra system on [0, N*T].

    Cell intensity is mu + |X| at the cell's left endpoint (frozen to mu when
    feedback is disabled); one shared window is extended in mark strips
    whenever the intensity outgrows it, which never disturbs atoms already
    accepted below the old bound.  X accumulates K((t - s)/N) at exact event
    times minus the left-endpoint compensator integral of the intensity.
    Output is the rescaled path t -> X(N t)/N on [0, T]; the unscaled
    intensity grid and window live in diagnostics for re-verification.
    """
    if c.T == 0.0:
        out = _empty_output(1, "volterra_prelimit")
        out.diagnostics.update({"gamma": c.gamma, "N": c.N, "mu": c.mu})
        return out
    kernel = PowerKernel(c.gamma)
    span = c.N * c.T
    n = _n_cells(span, c.h)
    tgrid = np.arange(n) * c.h
    kv = np.concatenate([[0.0], kernel(np.arange(1, n + 1) * c.h / c.N)])
    bound = max(c.mu + 1.0, 1.0)
    if bound > c.bound_ceiling:
        raise BoundOverflowError(f"initial bound {bound} above ceiling {c.bound_ceiling}")
    window = sample_window(span, bound, False, c.seed.split("window"))
    x = np.zeros(n)
    lam = np.zeros(n)
    event_times: list[float] = []
    events_arr = np.empty(0)
    n_rejected = 0
    n_ext = 0
    for k in range(n):
        lam_k = c.mu if c.freeze_feedback else c.mu + abs(x[k])
        lam[k] = lam_k
        while lam_k > window.mark_bound:
            new_bound = max(2.0 * window.mark_bound, 1.25 * lam_k)
            if new_bound > c.bound_ceiling:
                raise BoundOverflowError(
                    f"adaptive bound {new_bound} above ceiling {c.bound_ceiling}"
                )
            window = extend_window(window, new_bound, c.seed.split("extend", n_ext))
            n_ext += 1
        lo = int(np.searchsorted(window.times, tgrid[k], side="left"))
        if k + 1 < n:
            hi = int(np.searchsorted(window.times, tgrid[k] + c.h, side="left"))
        else:
            hi = int(np.searchsorted(window.times, span, side="right"))
        if hi > lo:
            ts = window.times[lo:hi]
            zs = window.marks[lo:hi]
            thr = np.full(ts.shape, lam_k)
            if k >= 1:
                thr[ts == tgrid[k]] = lam[k - 1]
            acc = zs <= thr
            event_times.extend(ts[acc].tolist())
            n_rejected += int(np.count_nonzero(~acc))
        if k + 1 < n:
            events_arr = np.asarray(event_times)
            jump = float(np.sum(kernel((tgrid[k] + c.h - events_arr) / c.N))) if events_arr.size else 0.0
            comp = c.h * float(np.dot(lam[: k + 1], kv[k + 1 : 0 : -1]))
            x[k + 1] = jump - comp
    ev = np.asarray(event_times)
    counting = StepPath.from_arrays(0.0, ev, np.arange(1, ev.size + 1, dtype=float), span)
    h_resc = c.h / c.N
    rescaled = GridPath(h_resc, x / c.N, c.T)
    diag = {
        "model": "volterra_prelimit",
        "gamma": c.gamma,
        "N": c.N,
        "mu": c.mu,
        "n_events": int(ev.size),
        "n_rejected": n_rejected,
        "n_extensions": n_ext,
        "mark_bound": window.mark_bound,
        "prelimit_intensity": GridPath(c.h, lam, span),
        "prelimit_state": GridPath(c.h, x, span),
    }
    return SimulationOutput(rescaled, PathVector([counting]), (window,), diag)


# ---------------------------------------------------------------------------
# Hawkes-type mean-field system, coupled to its deterministic limit


def _sample_superposed(
    horizon: float, bound: float, multiplicity: int, stream: RngStream
) -> tuple[np.ndarray, np.ndarray]:
    """Atoms of the superposition of `multiplicity` unit windows on [0,T]x[0,bound]."""
    if multiplicity == 0 or bound == 0.0:
        return np.empty(0), np.empty(0)
    w = sample_window(horizon, multiplicity * bound, False, stream)
    return w.times, w.marks / multiplicity


def _extend_superposed(
    times: np.ndarray,
    marks: np.ndarray,
    horizon: float,
    old_bound: float,
    new_bound: float,
    multiplicity: int,
    stream: RngStream,
) -> tuple[np.ndarray, np.ndarray]:
    if multiplicity == 0:
        return times, marks
    strip_t, strip_z = _sample_superposed(horizon, new_bound - old_bound, multiplicity, stream)
    strip_z = strip_z + old_bound
    t_all = np.concatenate([times, strip_t])
    z_all = np.concatenate([marks, strip_z])
    order = np.argsort(t_all, kind="stable")
    return t_all[order], z_all[order]


def simulate_hawkes_coupled(c: HawkesMeanFieldConfig) -> CoupledSimulationOutput:
    """Couple the N-particle Hawkes-type system to its deterministic limit.

    The limit path comes from solve_volterra_deterministic on the same grid.
    n_obs windows are retained and thinned twice, against f(X^N) and against
    f(X-bar); both counting families therefore ride the same atoms, which is
    the pathwise coupling the error curves measure.  The other N - n_obs
    driving measures enter only through their accepted event counts, so they
    are sampled as one superposed stream.  X^N accumulates kernel weights
    K(t_k - t_j)/N with events binned at their cell's left endpoint, making
    the N -> infinity limit of the scheme equal to the deterministic
    recursion at any h.
    """
    if c.T == 0.0:
        pre = _empty_output(c.n_obs, "hawkes_prelimit")
        lim = _empty_output(c.n_obs, "hawkes_limit")
        return CoupledSimulationOutput(pre, lim)
    n = _n_cells(c.T, c.h)
    tgrid = np.arange(n) * c.h
    xbar = solve_volterra_deterministic(c.kernel, c.rate_fn, c.T, c.h)
    fbar = np.asarray(c.rate_fn(xbar.values), dtype=float)
    bound = max(1.0, 1.5 * float(np.max(fbar)))
    if bound > c.bound_ceiling:
        raise BoundOverflowError(f"initial bound {bound} above ceiling {c.bound_ceiling}")
    obs = [sample_window(c.T, bound, False, c.seed.split("obs", i)) for i in range(c.n_obs)]
    mult = c.N - c.n_obs
    agg_t, agg_z = _sample_superposed(c.T, bound, mult, c.seed.split("agg"))
    kv = np.concatenate([[0.0], np.asarray(c.kernel(np.arange(1, n + 1) * c.h), dtype=float)])
    xn = np.zeros(n)
    lam = np.zeros(n)
    counts = np.zeros(n)
    z_pre: list[list[float]] = [[] for _ in range(c.n_obs)]
    z_lim: list[list[float]] = [[] for _ in range(c.n_obs)]
    n_rejected = 0
    n_ext = 0

    def cell_slice(times: np.ndarray, k: int) -> tuple[int, int]:
        lo = int(np.searchsorted(times, tgrid[k], side="left"))
        if k + 1 < n:
            hi = int(np.searchsorted(times, tgrid[k] + c.h, side="left"))
        else:
            hi = int(np.searchsorted(times, c.T, side="right"))
        return lo, hi

    for k in range(n):
        lam_k = float(c.rate_fn(xn[k]))
        lam[k] = lam_k
        while lam_k > bound:
            new_bound = max(2.0 * bound, 1.25 * lam_k)
            if new_bound > c.bound_ceiling:
                raise BoundOverflowError(
                    f"adaptive bound {new_bound} above ceiling {c.bound_ceiling}"
                )
            for i in range(c.n_obs):
                obs[i] = extend_window(obs[i], new_bound, c.seed.split("ext", n_ext, "obs", i))
            agg_t, agg_z = _extend_superposed(
                agg_t, agg_z, c.T, bound, new_bound, mult, c.seed.split("ext", n_ext, "agg")
            )
            bound = new_bound
            n_ext += 1
        accepted_here = 0
        for i in range(c.n_obs):
            lo, hi = cell_slice(obs[i].times, k)
            if hi > lo:
                ts = obs[i].times[lo:hi]
                zs = obs[i].marks[lo:hi]
                thr_pre = np.full(ts.shape, lam_k)
                thr_lim = np.full(ts.shape, fbar[k])
                if k >= 1:
                    on_edge = ts == tgrid[k]
                    thr_pre[on_edge] = lam[k - 1]
                    thr_lim[on_edge] = fbar[k - 1]
                acc_pre = zs <= thr_pre
                z_pre[i].extend(ts[acc_pre].tolist())
                z_lim[i].extend(ts[zs <= thr_lim].tolist())
                accepted_here += int(np.count_nonzero(acc_pre))
                n_rejected += int(np.count_nonzero(~acc_pre))
        lo, hi = cell_slice(agg_t, k)
        if hi > lo:
            zs = agg_z[lo:hi]
            thr = np.full(zs.shape, lam_k)
            if k >= 1:
                thr[agg_t[lo:hi] == tgrid[k]] = lam[k - 1]
            acc = zs <= thr
            accepted_here += int(np.count_nonzero(acc))
            n_rejected += int(np.count_nonzero(~acc))
        counts[k] = accepted_here
        if k + 1 < n:
            xn[k + 1] = float(np.dot(counts[: k + 1], kv[k + 1 : 0 : -1])) / c.N

    def to_paths(acc: list[list[float]]) -> PathVector:
        comps = []
        for times in acc:
            arr = np.asarray(times)
            comps.append(StepPath.from_arrays(0.0, arr, np.arange(1, arr.size + 1, dtype=float), c.T))
        return PathVector(comps)

    windows = tuple(obs)
    rate_pre = GridPath(c.h, lam, c.T)
    rate_lim = GridPath(c.h, fbar, c.T)
    pre = SimulationOutput(
        intensity_path=GridPath(c.h, xn, c.T),
        counting_paths=to_paths(z_pre),
        windows_used=windows,
        diagnostics={
            "model": "hawkes_prelimit",
            "N": c.N,
            "kernel": c.kernel.descriptor(),
            "rate_fn": c.rate_fn.descriptor(),
            "rate_path": rate_pre,
            "mark_bound": bound,
            "n_events": int(counts.sum()),
            "n_rejected": n_rejected,
            "n_extensions": n_ext,
            "cell_counts": counts,
        },
    )
    lim = SimulationOutput(
        intensity_path=xbar,
        counting_paths=to_paths(z_lim),
        windows_used=windows,
        diagnostics={
            "model": "hawkes_limit",
            "kernel": c.kernel.descriptor(),
            "rate_fn": c.rate_fn.descriptor(),
            "rate_path": rate_lim,
            "mark_bound": bound,
            "n_events": int(sum(len(t) for t in z_lim)),
            "compensator_horizon": float(c.h * np.sum(fbar)),
        },
    )
    return CoupledSimulationOutput(pre, lim)


# ---------------------------------------------------------------------------
# re-verification


def _replay_meanfield(out: SimulationOutput) -> bool:
    """Recompute every thinning decision of the diffusive prelimit exactly."""
    d = out.diagnostics
    r = d["replay"]
    alpha = d["alpha"]
    sqrt_n = math.sqrt(d["N"])
    t_event = 0.0
    x_event = 0.0
    e = 0
    for i in range(r["cand_t"].size):
        tc = float(r["cand_t"][i])
        x_left = x_event * math.exp(-alpha * (tc - t_event))
        lam = 1.0 + x_left * x_left
        if lam != r["cand_lambda"][i]:
            return False
        accept = r["cand_z"][i] <= lam
        if bool(accept) != bool(r["cand_accepted"][i]):
            return False
        if accept:
            if r["event_x_before"][e] != x_left:
                return False
            x_event = x_left + float(r["event_u"][e]) / sqrt_n
            if r["event_x_after"][e] != x_event:
                return False
            t_event = tc
            e += 1
    if e != r["event_j"].size:
        return False
    ev_t = r["cand_t"][r["cand_accepted"]]
    for i, p in enumerate(out.counting_paths):
        mine = ev_t[r["event_j"] == i]
        if not np.array_equal(p.jump_times, mine):
            return False
    return (
        np.array_equal(out.intensity_path.jump_times, ev_t)
        and np.array_equal(out.intensity_path.jump_values, r["event_x_after"])
    )


def reverify(out: SimulationOutput) -> bool:
    """Check that the recorded counting paths follow from the recorded inputs.

    Grid-intensity models are re-run through the thinning map bitwise; the
    exact-decay diffusive prelimit is replayed from its candidate table.
    """
    model = out.diagnostics.get("model")
    if model == "meanfield_prelimit":
        return _replay_meanfield(out)
    if out.counting_paths is None or not out.windows_used:
        return True
    if model == "volterra_prelimit":
        rate = out.diagnostics["prelimit_intensity"]
        horizon = rate.horizon
    else:
        rate = out.diagnostics["rate_path"]
        horizon = out.counting_paths.horizon
    inp = ThinningInput((rate,) * len(out.windows_used), out.windows_used, horizon)
    again = phi(inp)
    return all(a == b for a, b in zip(again, out.counting_paths))
