"""High-precision reference evaluator and accuracy auditing.

The reference integrates exp(g) over a window found per evaluation point:
the integrand's log-maximum is located by root finding on g', and the
window ends where the integrand has decayed to machine epsilon relative to
the peak.  Below the series threshold the reference returns the series
value, which is the accuracy authority in that regime; the dynamic-window
integral is what loses accuracy there at production bin counts.

Relative error follows the audit metric RE = log10(1 + |ref - out| / eps),
computed on base-10 logs of K.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .besselk import DEFAULT_CONFIG, DomainError, EvalPoint, QuadratureConfig

LN_EPS = math.log(kernels.EPS_MACHINE)

DEFAULT_ORACLE_BINS = 2 ** 16

_FINDRANGE_M_START = -40
_FINDRANGE_M_CAP = 64


class ConvergenceError(RuntimeError):
    """A root finder failed to bracket or converge."""


@dataclass(frozen=True)
class IntegrationWindow:
    """Dynamic integration window [t0, t1] with the integrand log-max at t_max."""

    t0: float
    t1: float
    t_max: float


def find_range(f) -> tuple[float, float]:
    """Bracket the sign change of a function with a negative tail.

    Probes f at doubling abscissae 2^m starting from 2^-40; returns
    (2^(m-1), 2^m) for the smallest m with f(2^m) < 0.
    """
    for m in range(_FINDRANGE_M_START, _FINDRANGE_M_CAP + 1):
        if f(2.0 ** m) < 0.0:
            return 2.0 ** (m - 1), 2.0 ** m
    raise ConvergenceError("no sign change up to 2^64; invalid integrand parameters")


def find_zero(f, lo: float, hi: float, tol: float = 1e-12, df=None,
              max_iter: int = 200) -> float:
    """Root of f in [lo, hi]: bisection steps, switching to Newton once the
    Newton proposal from the midpoint stays inside the bracket."""
    flo = f(lo)
    if flo == 0.0:
        return lo
    fhi = f(hi)
    if fhi == 0.0:
        return hi
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise ConvergenceError(f"no sign change on [{lo!r}, {hi!r}]")
    for _ in range(max_iter):
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        step_to = mid
        if df is not None:
            d = df(mid)
            if d != 0.0:
                newton = mid - f(mid) / d
                if lo < newton < hi:
                    step_to = newton
        fm = f(step_to)
        if fm == 0.0:
            return step_to
        if math.copysign(1.0, fm) == math.copysign(1.0, flo):
            lo, flo = step_to, fm
        else:
            hi, fhi = step_to, fm
    raise ConvergenceError(f"no convergence within {max_iter} iterations")


def integration_window(p: EvalPoint, tol: float = 1e-12) -> IntegrationWindow:
    """Window where exp(g) exceeds machine epsilon relative to its peak."""
    if p.x <= 0.0:
        raise DomainError("x must be positive")
    x, nu = p.x, p.nu

    def g(t):
        return kernels.log_integrand(t, x, nu)

    def g1(t):
        return kernels.log_integrand_d1(t, x, nu)

    def g2(t):
        return kernels.log_integrand_d2(t, x, nu)

    if nu * nu <= x:
        t_max = 0.0
    else:
        lo, hi = find_range(g1)
        t_max = find_zero(g1, lo, hi, tol=tol, df=g2)

    target = g(t_max) + LN_EPS

    def decay(t):
        return g(t) - target

    if decay(0.0) >= 0.0:
        t0 = 0.0
    else:
        t0 = find_zero(decay, 0.0, t_max, tol=tol, df=g1)

    lo, hi = find_range(lambda s: decay(t_max + s))
    t1 = find_zero(decay, t_max + lo, t_max + hi, tol=tol, df=g1)
    return IntegrationWindow(t0=t0, t1=t1, t_max=t_max)


def _oracle_pair(p: EvalPoint, bins: int) -> tuple[float, float]:
    """(shift, ln_sum) of the dynamic-window quadrature; log K = shift + ln_sum."""
    win = integration_window(p)
    h = (win.t1 - win.t0) / bins
    m_star = int(round((win.t_max - win.t0) / h))
    m_star = min(max(m_star, 0), bins)
    return kernels.window_lse(p.x, p.nu, win.t0, win.t1, bins, m_star)


def oracle_log_bessel_k(p: EvalPoint, bins: int = DEFAULT_ORACLE_BINS,
                        cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Reference log K_nu(x).

    Below the series threshold the series value is returned: the integral
    representation is the side that degrades there, so the series is the
    authority for the audit grid's small-x cells.
    """
    if p.x <= 0.0:
        raise DomainError("x must be positive")
    if bins < 1:
        raise DomainError("bins must be positive")
    if p.x < cfg.small_x_threshold:
        return kernels.temme_series_log(p.x, p.nu, cfg.eps_machine, cfg.series_cap)
    shift, ln_sum = _oracle_pair(p, bins)
    return shift + ln_sum


def _oracle_log10(p: EvalPoint, bins: int, cfg: QuadratureConfig) -> float:
    if p.x < cfg.small_x_threshold:
        ln_k = kernels.temme_series_log(p.x, p.nu, cfg.eps_machine, cfg.series_cap)
        return kernels.ln_to_log10(ln_k)
    shift, ln_sum = _oracle_pair(p, bins)
    return kernels.assemble_log10(shift, ln_sum)


def relative_error(reference: float, output: float) -> float:
    """RE = log10(1 + |reference - output| / eps_machine)."""
    if not (math.isfinite(reference) and math.isfinite(output)):
        raise DomainError("relative_error needs finite inputs")
    return math.log10(1.0 + abs(reference - output) / kernels.EPS_MACHINE)


@dataclass(frozen=True)
class RelErrorGrid:
    """RE per (nu, x) cell; invalid cells are NaN and excluded from max_re."""

    nus: np.ndarray
    xs: np.ndarray
    re: np.ndarray
    method: str

    @property
    def max_re(self) -> float:
        return float(np.nanmax(self.re))

    def to_csv(self, path_or_buf) -> None:
        buf = path_or_buf if hasattr(path_or_buf, "write") else io.StringIO()
        buf.write("nu,x,re\n")
        for i, nu in enumerate(self.nus):
            for j, x in enumerate(self.xs):
                buf.write(f"{nu:.17g},{x:.17g},{self.re[i, j]:.17g}\n")
        if buf is not path_or_buf:
            with open(path_or_buf, "w") as fh:
                fh.write(buf.getvalue())


def oracle_log10_grid(nus: np.ndarray, xs: np.ndarray,
                      bins: int = DEFAULT_ORACLE_BINS,
                      cfg: QuadratureConfig = DEFAULT_CONFIG,
                      workers: int = 1) -> np.ndarray:
    """Reference base-10 log K over a (nu, x) grid."""
    nus = np.asarray(nus, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    out = np.empty((nus.size, xs.size))

    def fill_row(i):
        nu = float(nus[i])
        for j in range(xs.size):
            try:
                out[i, j] = _oracle_log10(EvalPoint(float(xs[j]), nu), bins, cfg)
            except (ConvergenceError, DomainError):
                out[i, j] = np.nan

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill_row, range(nus.size)))
    else:
        for i in range(nus.size):
            fill_row(i)
    return out


METHODS = ("refined", "pure-integral", "oracle-vs-oracle")


def error_heatmap(grid_nu: np.ndarray, grid_x: np.ndarray, method: str,
                  cfg: QuadratureConfig = DEFAULT_CONFIG,
                  oracle_bins: int = DEFAULT_ORACLE_BINS,
                  reference: np.ndarray | None = None,
                  workers: int = 1) -> RelErrorGrid:
    """RE of a method against the reference over a (nu, x) grid.

    `reference` accepts a precomputed reference grid (from oracle_log10_grid)
    so several method audits can share one reference pass.
    """
    nus = np.asarray(grid_nu, dtype=np.float64)
    xs = np.asarray(grid_x, dtype=np.float64)
    if nus.size == 0 or xs.size == 0:
        raise DomainError("grids must be non-empty")
    if np.any(xs <= 0.0):
        raise DomainError("x grid must be positive")
    if method not in METHODS:
        raise DomainError(f"method must be one of {METHODS}")

    if reference is None:
        reference = oracle_log10_grid(nus, xs, bins=oracle_bins, cfg=cfg, workers=workers)
    reference = np.asarray(reference, dtype=np.float64)
    if reference.shape != (nus.size, xs.size):
        raise DomainError("reference grid shape mismatch")

    out = np.empty((nus.size, xs.size))
    if method == "refined":
        kernels.refined_log10_grid(nus, xs, cfg.t_lower, cfg.t_upper, cfg.bins,
                                   cfg.small_x_threshold, cfg.eps_machine,
                                   cfg.series_cap, out)
    elif method == "pure-integral":
        kernels.pure_integral_log10_grid(nus, xs, cfg.t_lower, cfg.t_upper,
                                         cfg.bins, out)
    else:
        out[:] = oracle_log10_grid(nus, xs, bins=cfg.bins, cfg=cfg, workers=workers)

    with np.errstate(invalid="ignore"):
        re = np.log10(1.0 + np.abs(reference - out) / kernels.EPS_MACHINE)
    re[~np.isfinite(out) | ~np.isfinite(reference)] = np.nan
    return RelErrorGrid(nus=nus, xs=xs, re=re, method=method)
