"""Numerical laboratory for inertial coordination games with Gaussian learning."""

from .errors import (
    ConfigError,
    DesignVerificationError,
    DomainError,
    InfeasibleDesignError,
    InvalidSpecError,
    LengthError,
    NumericalError,
    RealizationError,
    UnconvergedError,
)
from .kernel import (
    GameConfig,
    PlayPath,
    PosteriorSchedule,
    ThresholdPath,
    aggregate_play,
    gamma_step,
    risk_dominant,
    simulate_complete_info,
    threshold_path,
    threshold_step,
)
from .normal import normal_cdf, normal_pdf, normal_quantile

__version__ = "0.1.0"
