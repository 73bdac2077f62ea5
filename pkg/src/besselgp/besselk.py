"""Modified Bessel function of the second kind, hybrid evaluator.

Small arguments (x below a configurable threshold, default 0.1) use the
Temme series with forward recurrence carried in log space; everything else
uses a trapezoid log-sum-exp quadrature over a fixed window whose upper
bound was established empirically for (x, nu) in [0, 140] x (0, 20].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from . import kernels

EPS_MACHINE = kernels.EPS_MACHINE

VALIDATED_X_MAX = 140.0
VALIDATED_NU_MAX = 20.0


class PathTaken(enum.Enum):
    SERIES = "series"
    INTEGRAL = "integral"


class DomainError(ValueError):
    """Input outside an operation's domain."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Operating point of the fixed-window quadrature and series."""

    t_lower: float = 0.0
    t_upper: float = 9.0
    bins: int = 40
    small_x_threshold: float = 0.1
    series_cap: int = 15000
    eps_machine: float = EPS_MACHINE

    def __post_init__(self):
        if not self.t_lower < self.t_upper:
            raise DomainError("t_lower must be below t_upper")
        if self.bins < 2:
            raise DomainError("bins must be at least 2")
        if self.small_x_threshold <= 0:
            raise DomainError("small_x_threshold must be positive")
        if self.series_cap < 1:
            raise DomainError("series_cap must be at least 1")


DEFAULT_CONFIG = QuadratureConfig()


@dataclass(frozen=True)
class EvalPoint:
    """One (x, nu) evaluation point; negative orders fold via K_{-nu} = K_nu
    before construction."""

    x: float
    nu: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and self.x >= 0.0):
            raise DomainError(f"x must be finite and nonnegative, got {self.x!r}")
        if not (math.isfinite(self.nu) and self.nu >= 0.0):
            raise DomainError(f"nu must be finite and nonnegative, got {self.nu!r}")


@dataclass(frozen=True)
class BesselResult:
    log_value: float
    value: float
    path_taken: PathTaken
    warning: str | None = field(default=None, compare=False)


def _result(log_value: float, path: PathTaken, p: EvalPoint) -> BesselResult:
    try:
        value = math.exp(log_value)
    except OverflowError:
        value = math.inf
    warning = None
    if p.x > VALIDATED_X_MAX or p.nu > VALIDATED_NU_MAX:
        warning = (
            f"(x={p.x:g}, nu={p.nu:g}) lies outside the validated region "
            f"[0, {VALIDATED_X_MAX:g}] x (0, {VALIDATED_NU_MAX:g}]"
        )
    return BesselResult(log_value, value, path, warning)


def temme_pair(x: float, mu: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """Starting values (K_mu(x), K_{mu+1}(x)) for -0.5 <= mu < 0.5."""
    if not 0.0 < x < cfg.small_x_threshold:
        raise DomainError(f"temme_pair needs 0 < x < {cfg.small_x_threshold:g}, got {x!r}")
    if not -0.5 <= mu < 0.5:
        raise DomainError(f"mu must lie in [-0.5, 0.5), got {mu!r}")
    s0, s1, _ = kernels.temme_sums(x, mu, cfg.eps_machine, cfg.series_cap)
    return s0, (2.0 / x) * s1


def bessel_k_series(p: EvalPoint, cfg: QuadratureConfig = DEFAULT_CONFIG) -> BesselResult:
    """Series path: Temme sums plus forward recurrence, log-domain."""
    if not 0.0 < p.x < cfg.small_x_threshold:
        raise DomainError(
            f"series path needs 0 < x < {cfg.small_x_threshold:g}, got {p.x!r}")
    log_k = kernels.temme_series_log(p.x, p.nu, cfg.eps_machine, cfg.series_cap)
    return _result(log_k, PathTaken.SERIES, p)


def log_integrand(t: float, p: EvalPoint) -> float:
    """g(t) = log cosh(nu t) - x cosh(t)."""
    if t < 0.0:
        raise DomainError("t must be nonnegative")
    if p.x <= 0.0:
        raise DomainError("x must be positive")
    return kernels.log_integrand(t, p.x, p.nu)


def log_integrand_d1(t: float, p: EvalPoint) -> float:
    if t < 0.0:
        raise DomainError("t must be nonnegative")
    return kernels.log_integrand_d1(t, p.x, p.nu)


def log_integrand_d2(t: float, p: EvalPoint) -> float:
    if t < 0.0:
        raise DomainError("t must be nonnegative")
    return kernels.log_integrand_d2(t, p.x, p.nu)


def fixed_window_log_bessel_k(x: float, nu: float,
                              cfg: QuadratureConfig = DEFAULT_CONFIG,
                              bins: int | None = None) -> float:
    """Raw fixed-window log K with no threshold guard.

    The bound audit and the pure-integral accuracy study deliberately apply
    this below the series threshold.
    """
    if x <= 0.0:
        raise DomainError("x must be positive")
    b = cfg.bins if bins is None else int(bins)
    shift, ln_sum = kernels.fixed_window_log_pair(x, nu, cfg.t_lower, cfg.t_upper, b)
    return shift + ln_sum


def bessel_k_integral(p: EvalPoint, cfg: QuadratureConfig = DEFAULT_CONFIG) -> BesselResult:
    """Integral path over the fixed window [t_lower, t_upper]."""
    if p.x < cfg.small_x_threshold:
        raise DomainError(
            f"integral path needs x >= {cfg.small_x_threshold:g}, got {p.x!r}")
    log_k = fixed_window_log_bessel_k(p.x, p.nu, cfg)
    return _result(log_k, PathTaken.INTEGRAL, p)


def bessel_k(p: EvalPoint, cfg: QuadratureConfig = DEFAULT_CONFIG) -> BesselResult:
    """K_nu(x): series below the threshold, fixed-window quadrature at and
    above it (the boundary belongs to the integral side)."""
    if p.x <= 0.0:
        raise DomainError("x must be positive (r = 0 is handled by the Matern kernel)")
    if p.x < cfg.small_x_threshold:
        return bessel_k_series(p, cfg)
    return bessel_k_integral(p, cfg)
