"""Point processes with stochastic intensity, built by thinning.

Exact Poisson windows on rectangles, cadlag path machinery with a Skorohod
upper-bound metric, the deterministic thinning map with its continuity
conditions, three particle-system simulators coupled to their limits, and
convergence diagnostics, all behind a reproducible counter-based RNG.
"""

from .errors import (
    BoundOverflowError,
    CoincidentJumpTimesError,
    ConfigError,
    DegenerateFitError,
    JumpCountMismatchError,
    MarkBoundError,
    ModelError,
    ValidationError,
)
from .rng import RngStream, derive_stream_id
from .poisson import (
    Atom,
    AtomMatching,
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
from .paths import (
    GridPath,
    PathVector,
    StepPath,
    TimeChange,
    as_step,
    left_value,
    load_path,
    save_path,
    skorohod_upper_distance,
    sup_norm,
    time_changed,
    uniform_distance,
)
from .thinning import ContinuityReport, ThinningInput, check_conditions, phi
from .models import (
    AffineRate,
    ConstRate,
    CoupledSimulationOutput,
    ExponentialKernel,
    HawkesMeanFieldConfig,
    MeanFieldDiffusiveConfig,
    PowerKernel,
    SigmoidRate,
    SimulationOutput,
    TabulatedKernel,
    VolterraConfig,
    parse_kernel,
    parse_rate_fn,
    reverify,
    simulate_hawkes_coupled,
    simulate_meanfield_limit,
    simulate_meanfield_prelimit,
    simulate_volterra_limit,
    simulate_volterra_prelimit,
    solve_volterra_deterministic,
)
from .diagnostics import (
    MarginalReport,
    RateCurve,
    RateFit,
    RateRow,
    SampleSet,
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
from .config import build_hawkes, build_meanfield, build_volterra, load_kv, parse_kv_text

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "ValidationError",
    "ConfigError",
    "MarkBoundError",
    "JumpCountMismatchError",
    "CoincidentJumpTimesError",
    "DegenerateFitError",
    "ModelError",
    "BoundOverflowError",
    # rng
    "RngStream",
    "derive_stream_id",
    # poisson windows
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
    # paths
    "StepPath",
    "GridPath",
    "TimeChange",
    "PathVector",
    "left_value",
    "sup_norm",
    "uniform_distance",
    "skorohod_upper_distance",
    "time_changed",
    "as_step",
    "save_path",
    "load_path",
    # thinning
    "ThinningInput",
    "ContinuityReport",
    "phi",
    "check_conditions",
    # models
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
    # diagnostics
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
    # config
    "parse_kv_text",
    "load_kv",
    "build_meanfield",
    "build_volterra",
    "build_hawkes",
]
