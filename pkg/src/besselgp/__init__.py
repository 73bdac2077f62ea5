"""BesselK evaluation, Matern covariance generation and desk-scale GP modeling."""

from .besselk import (
    BesselResult,
    DomainError,
    EvalPoint,
    PathTaken,
    QuadratureConfig,
    bessel_k,
    bessel_k_integral,
    bessel_k_series,
    fixed_window_log_bessel_k,
    log_integrand,
    log_integrand_d1,
    log_integrand_d2,
    temme_pair,
)

__all__ = [
    "BesselResult",
    "DomainError",
    "EvalPoint",
    "PathTaken",
    "QuadratureConfig",
    "bessel_k",
    "bessel_k_integral",
    "bessel_k_series",
    "fixed_window_log_bessel_k",
    "log_integrand",
    "log_integrand_d1",
    "log_integrand_d2",
    "temme_pair",
]

__version__ = "0.1.0"
