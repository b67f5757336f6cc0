"""Exact finite-sample stochastic-interpolant fields, samplers, and analysis."""

__version__ = "0.1.0"

from .analysis import (
    CONVERGED,
    DIVERGED,
    VICINITY,
    MemorizationReport,
    NNResult,
    classify_endpoints,
    fd_score_oracle,
    mc_velocity_oracle,
    memorization_test,
    monotone_divergence,
    nearest_neighbor,
    residual_variance,
)
from .dataset import TrainingSet, load_csv, save_csv, uniform_toy
from .errors import (
    BOUNDED,
    DENSITY_INVERSE,
    GAMMA_SCALED,
    ErrorModel,
    epsilon,
    regime_report,
    sample_batch_with_error,
    sample_with_error,
)
from .exceptions import (
    ExactSIError,
    InsufficientDataError,
    NotApplicableError,
    NumericError,
    SingularScoreError,
    SingularTimeError,
    ValidationError,
)
from .fields import (
    FieldValue,
    Weights,
    log_density,
    log_weights,
    score,
    velocity,
    velocity_two_sided,
)
from .samplers import (
    DRAW,
    TO_X,
    TO_Y,
    SamplerConfig,
    Trajectory,
    sample_batch,
    sample_deterministic,
    sample_stochastic,
    sample_two_sided,
)
from .schedules import (
    Coeffs,
    Schedule,
    available_kinds,
    coeffs,
    eval_schedule,
    make_schedule,
    noise_variance,
    regime_limit,
    validate_schedule,
)

__all__ = [
    "__version__",
    # schedules
    "Schedule", "Coeffs", "available_kinds", "make_schedule", "eval_schedule",
    "coeffs", "validate_schedule", "noise_variance", "regime_limit",
    # dataset
    "TrainingSet", "load_csv", "save_csv", "uniform_toy",
    # fields
    "Weights", "FieldValue", "log_weights", "velocity", "score",
    "log_density", "velocity_two_sided",
    # samplers
    "DRAW", "TO_X", "TO_Y", "SamplerConfig", "Trajectory",
    "sample_deterministic", "sample_stochastic", "sample_batch", "sample_two_sided",
    # errors
    "BOUNDED", "GAMMA_SCALED", "DENSITY_INVERSE", "ErrorModel", "epsilon",
    "sample_with_error", "sample_batch_with_error", "regime_report",
    # analysis
    "CONVERGED", "VICINITY", "DIVERGED", "NNResult", "MemorizationReport",
    "nearest_neighbor", "memorization_test", "classify_endpoints",
    "residual_variance", "monotone_divergence", "mc_velocity_oracle",
    "fd_score_oracle",
    # exceptions
    "ExactSIError", "ValidationError", "SingularTimeError", "SingularScoreError",
    "NotApplicableError", "NumericError", "InsufficientDataError",
]
