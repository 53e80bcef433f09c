"""Shadow simulated annealing and ABC shadow inference for Gibbs point processes.

The package fits exponential family Gibbs models (pairwise interaction
points, area interaction points, interacting segments, spine attracted
galaxy patterns) whose normalizing constants are intractable.  Inference
runs entirely through auxiliary pattern simulation: a Metropolis-Hastings
birth, death and move sampler refreshes an auxiliary pattern, and the
shadow chain updates the parameter vector against it.  A cooled version of
the same chain performs global optimization of the posterior.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .core import (
    ConfigError,
    ContractViolation,
    Pattern,
    PriorBox,
    Violation,
    Window,
    log_unnorm_density,
    pattern_validate,
    prior_log_density,
    wrap_orientation,
)
from .models import (
    AreaInteractionModel,
    CandyModel,
    GalaxyModel,
    StraussModel,
    model_from_name,
    statistic_delta_birth,
    statistic_delta_death,
    sufficient_statistics,
)
from .mh import (
    ChainState,
    MoveMix,
    PatternChain,
    ThinnedStats,
    mean_statistics,
    mh_step,
    sample_pattern,
)
from .shadow import (
    Schedule,
    ShadowConfig,
    SsaTrajectory,
    abc_shadow_run,
    shadow_acceptance,
    shadow_inner_update,
    ssa_run,
)
from .analysis import (
    ErrorReport,
    SampleSummary,
    asymptotic_errors,
    batch_means_covariance,
    epanechnikov_map,
    error_propagation,
    mcse,
    one_sample_t_test,
    quantiles,
    summarize_samples,
    tv_distance,
)
from .config import RunConfig, load_config

__all__ = [
    "__version__",
    "ConfigError",
    "ContractViolation",
    "Pattern",
    "PriorBox",
    "Violation",
    "Window",
    "log_unnorm_density",
    "pattern_validate",
    "prior_log_density",
    "wrap_orientation",
    "AreaInteractionModel",
    "CandyModel",
    "GalaxyModel",
    "StraussModel",
    "model_from_name",
    "statistic_delta_birth",
    "statistic_delta_death",
    "sufficient_statistics",
    "ChainState",
    "MoveMix",
    "PatternChain",
    "ThinnedStats",
    "mean_statistics",
    "mh_step",
    "sample_pattern",
    "Schedule",
    "ShadowConfig",
    "SsaTrajectory",
    "abc_shadow_run",
    "shadow_acceptance",
    "shadow_inner_update",
    "ssa_run",
    "ErrorReport",
    "SampleSummary",
    "asymptotic_errors",
    "batch_means_covariance",
    "epanechnikov_map",
    "error_propagation",
    "mcse",
    "one_sample_t_test",
    "quantiles",
    "summarize_samples",
    "tv_distance",
    "RunConfig",
    "load_config",
]
