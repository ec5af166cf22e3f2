"""Design, simulation and inference for N-of-1 experiments with linear time-invariant carryover."""

__version__ = "0.1.0"

from ._backend import NAME as BACKEND
from .chaos_oracle import (
    chaos_moments_formula,
    enumerate_chaos_moments,
    enumerate_estimator_distribution,
)
from .design import DesignRealization, DesignSpec, enumerate_paths, rapid_paths, realize
from .errors import (
    ConfigurationError,
    DimensionError,
    DomainError,
    Nof1Error,
    PreconditionError,
    RefusalError,
)
from .estimation import (
    Observation,
    estimate_error,
    estimate_g_truncated,
    ht_estimate,
    mom_estimate,
)
from .inference import (
    ConfidenceInterval,
    confidence_interval,
    estimate_report,
    normality_diagnostics,
)
from .model import EstimandWeights, estimand, make_estimand, simulate
from .signal import circular_convolve, convolve, linear_convolve
from .simulation import (
    SimulationConfig,
    compare_designs,
    consistency_sweep,
    coverage_experiment,
    run_monte_carlo,
)
from .variance import VarianceDecomposition, plugin_variance, snr_analysis, variance

__all__ = [
    "BACKEND",
    "ConfidenceInterval",
    "ConfigurationError",
    "DesignRealization",
    "DesignSpec",
    "DimensionError",
    "DomainError",
    "EstimandWeights",
    "Nof1Error",
    "Observation",
    "PreconditionError",
    "RefusalError",
    "SimulationConfig",
    "VarianceDecomposition",
    "chaos_moments_formula",
    "circular_convolve",
    "compare_designs",
    "confidence_interval",
    "consistency_sweep",
    "convolve",
    "coverage_experiment",
    "enumerate_chaos_moments",
    "enumerate_estimator_distribution",
    "enumerate_paths",
    "estimand",
    "estimate_error",
    "estimate_g_truncated",
    "estimate_report",
    "ht_estimate",
    "linear_convolve",
    "make_estimand",
    "mom_estimate",
    "normality_diagnostics",
    "plugin_variance",
    "rapid_paths",
    "realize",
    "run_monte_carlo",
    "simulate",
    "snr_analysis",
    "variance",
]
