"""Compiled numerical core.

Every hyperbolic / exponential evaluation used by the production evaluator,
the reference integrator and the covariance engine goes through the jitted
functions in this module, so all callers see identical integrand arithmetic.
Kernels are scalar loops (no SIMD re-association), which keeps results
bitwise reproducible across batch sizes, tile shapes and worker counts.
"""

import math

import numpy as np
from numba import njit

EPS_MACHINE = 2.0 ** -52
LN2 = 0.6931471805599453

# 1/ln(10) as a double-double pair; used to emit base-10 logs with a single
# final rounding.
_INV_LN10_HI = 0.4342944819032518
_INV_LN10_LO = 1.098319650216765e-17

# Odd Taylor coefficients d1, d3, ... of 1/Gamma(1+z) at z=0 (frozen from a
# 60-digit expansion).  gamma1(mu) = [1/G(1-mu) - 1/G(1+mu)] / (2 mu)
# = -(d1 + d3 mu^2 + d5 mu^4 + ...), accurate to ~1e-23 over |mu| <= 0.5,
# with no cancellation at mu -> 0.
_G1_ODD = np.array([
    0.57721566490153286061,
    -0.042002635034095235529,
    -0.042197734555544336748,
    0.0072189432466630995424,
    -0.00021524167411495097282,
    -2.0134854780788238656e-05,
    1.1330272319816958824e-06,
    6.1160951044814158179e-09,
    -1.1812745704870201446e-09,
    7.782263439905071254e-12,
    5.100370287454475979e-13,
    -5.3481225394230179824e-15,
])


@njit(cache=True, nogil=True)
def log_cosh(z):
    """log(cosh(z)), overflow-safe for any finite z."""
    z = abs(z)
    if z < 25.0:
        return math.log(math.cosh(z))
    return z - LN2 + math.log1p(math.exp(-2.0 * z))


@njit(cache=True, nogil=True)
def log_integrand(t, x, nu):
    """g(t) = log cosh(nu t) - x cosh(t)."""
    return log_cosh(nu * t) - x * math.cosh(t)


@njit(cache=True, nogil=True)
def log_integrand_d1(t, x, nu):
    """g'(t) = nu tanh(nu t) - x sinh(t)."""
    return nu * math.tanh(nu * t) - x * math.sinh(t)


@njit(cache=True, nogil=True)
def log_integrand_d2(t, x, nu):
    """g''(t) = nu^2 sech^2(nu t) - x cosh(t)."""
    z = abs(nu * t)
    if z < 350.0:
        sech = 1.0 / math.cosh(z)
    else:
        sech = 0.0
    return nu * nu * sech * sech - x * math.cosh(t)


@njit(cache=True, nogil=True, inline="always")
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(cache=True, nogil=True, inline="always")
def _two_prod(a, b):
    # Dekker/Veltkamp split product (no FMA requirement).
    p = a * b
    split = 134217729.0
    ah = a * split
    ah = ah - (ah - a)
    al = a - ah
    bh = b * split
    bh = bh - (bh - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


@njit(cache=True, nogil=True)
def assemble_log10(shift, ln_sum):
    """(shift + ln_sum) / ln(10) with one final rounding.

    The straightforward expression rounds the natural-log total first, which
    costs half an ulp at the magnitude of log K; auditing against the
    reference needs that to stay sub-ulp at base-10 scale.
    """
    p1, e1 = _two_prod(shift, _INV_LN10_HI)
    p2, e2 = _two_prod(ln_sum, _INV_LN10_HI)
    lo = shift * _INV_LN10_LO + ln_sum * _INV_LN10_LO + e1 + e2
    s, e = _two_sum(p1, p2)
    return s + (e + lo)


@njit(cache=True, nogil=True)
def grid_peak_index(x, nu, t0, t1, bins):
    """Index of the quadrature node maximizing g over the uniform grid."""
    h = (t1 - t0) / bins
    best = -math.inf
    m_star = 0
    for m in range(bins + 1):
        g = log_integrand(t0 + m * h, x, nu)
        if g > best:
            best = g
            m_star = m
    return m_star


@njit(cache=True, nogil=True, inline="always")
def _node_exponent(anu, x, dt, t_star, z_star, lc_star, ch_star, ss, cs):
    """g(t_star + dt) - g(t_star) from hyperbolic identities (direct libm)."""
    z_m = z_star + anu * dt
    if z_m >= 30.0 and z_star >= 30.0:
        da = anu * dt
    elif z_m < 25.0 and z_star < 25.0:
        da = math.log(math.cosh(z_m) / ch_star)
    else:
        da = log_cosh(z_m) - lc_star
    sh = math.sinh(0.5 * dt)
    ch = math.cosh(0.5 * dt)
    db = 2.0 * x * (ss * ch + cs * sh) * sh
    return da - db


@njit(cache=True, nogil=True)
def canonical_anchor_t(x, nu):
    """Anchor abscissa near the integrand's log-maximum, a function of
    (x, nu) only.  Both the production and reference quadratures report
    their logs against g at this point, so its evaluation rounding drops
    out of any cross comparison."""
    anu = abs(nu)
    if anu * anu <= x:
        return 0.0
    return math.asinh(anu / x)


@njit(cache=True, nogil=True)
def window_lse(x, nu, t0, t1, bins, m_star):
    """Trapezoid log-sum-exp of exp(g) over [t0, t1].

    The running sum is anchored at node m_star (the caller's estimate of the
    grid maximum of g); exponent differences g(t_m) - g(t_star) come from
    hyperbolic identities rather than from subtracting two large naive
    evaluations, so the anchor's own evaluation rounding cancels from every
    term.  Nodes are walked outward from m_star and each direction stops
    once the integrand has decayed below exp(-46) of the peak (g is
    unimodal: g' has at most one positive root).

    Returns (shift, ln_sum) with log K = shift + ln_sum, where shift is g at
    the canonical anchor point: a function of (x, nu) alone, so independent
    quadratures of the same point report against the same anchor double and
    their comparison is free of its rounding.
    """
    h = (t1 - t0) / bins
    anu = abs(nu)
    t_star = t0 + m_star * h
    z_star = anu * t_star
    lc_star = log_cosh(z_star)
    ch_star = math.cosh(z_star) if z_star < 25.0 else math.inf
    ss = math.sinh(t_star)
    cs = math.cosh(t_star)

    acc = 1.0 if 0 < m_star < bins else 0.5  # k = 0 node
    comp = 0.0
    for direction in range(2):
        sign = 1.0 if direction == 0 else -1.0
        span = (bins - m_star) if direction == 0 else m_star
        for k in range(1, span + 1):
            dt = sign * (k * h)
            dg = _node_exponent(anu, x, dt, t_star, z_star, lc_star, ch_star, ss, cs)
            if dg <= -46.0:
                break
            m = m_star + (k if direction == 0 else -k)
            w = 0.5 if (m == 0 or m == bins) else 1.0
            y = w * math.exp(dg) - comp
            t_acc = acc + y
            comp = (t_acc - acc) - y
            acc = t_acc

    # Rebase the reported decomposition onto the canonical anchor.
    t_hat = canonical_anchor_t(x, nu)
    z_hat = anu * t_hat
    shift = log_cosh(z_hat) - x * math.cosh(t_hat)
    dt_sh = t_star - t_hat
    if z_star >= 30.0 and z_hat >= 30.0:
        da_sh = anu * dt_sh
    else:
        da_sh = lc_star - log_cosh(z_hat)
    sh = math.sinh(0.5 * dt_sh)
    db_sh = 2.0 * x * (math.sinh(t_hat) * math.cosh(0.5 * dt_sh) + math.cosh(t_hat) * sh) * sh
    dg_sh = da_sh - db_sh
    return shift, dg_sh + math.log(h * acc)


@njit(cache=True, nogil=True)
def fixed_window_log_pair(x, nu, t0, t1, bins):
    """Fixed-window quadrature: anchor at the grid argmax, per the batch rule."""
    m_star = grid_peak_index(x, nu, t0, t1, bins)
    return window_lse(x, nu, t0, t1, bins, m_star)


@njit(cache=True, nogil=True)
def _gamma1(mu):
    acc = 0.0
    mu2 = mu * mu
    p = 1.0
    for i in range(_G1_ODD.shape[0]):
        acc += _G1_ODD[i] * p
        p *= mu2
    return -acc


@njit(cache=True, nogil=True)
def temme_sums(x, mu, eps, series_cap):
    """Temme small-argument series sums for K_mu and K_{mu+1}.

    Returns (s0, s1, terms) with K_mu = s0 and K_{mu+1} = (2/x) * s1.
    Both series stop once their latest terms drop below eps relative to the
    running sums, capped at series_cap terms.
    """
    d = math.log(2.0 / x)
    sigma = mu * d
    gam1 = _gamma1(mu)
    gam2 = 0.5 * (1.0 / math.gamma(1.0 - mu) + 1.0 / math.gamma(1.0 + mu))
    if abs(mu) < 1e-10:
        fact = 1.0
    else:
        fact = mu * math.pi / math.sin(mu * math.pi)
    if sigma == 0.0:
        sh = 1.0
    else:
        sh = math.sinh(sigma) / sigma
    f = fact * (math.cosh(sigma) * gam1 + gam2 * sh * d)
    p = 0.5 * math.exp(sigma) * math.gamma(1.0 + mu)
    q = 0.5 * math.exp(-sigma) * math.gamma(1.0 - mu)
    c = 1.0
    s0 = f
    s1 = p  # h_0 = p_0
    x2_4 = 0.25 * x * x
    terms = 1
    for k in range(1, series_cap + 1):
        f = (k * f + p + q) / (k * k - mu * mu)
        p /= (k - mu)
        q /= (k + mu)
        c *= x2_4 / k
        del0 = c * f
        del1 = c * (p - k * f)
        s0 += del0
        s1 += del1
        terms = k + 1
        if abs(del0) < eps * abs(s0) and abs(del1) < eps * abs(s1):
            break
    return s0, s1, terms


@njit(cache=True, nogil=True)
def temme_series_log(x, nu, eps, series_cap):
    """log K_nu(x) for small x via Temme sums plus forward recurrence.

    The recurrence runs in log space: each step adds
    log((2 eta / x) + exp(l_prev - l_cur)) to the running log, which cannot
    overflow even when K itself does.
    """
    m_steps = int(math.floor(nu + 0.5))
    mu = nu - m_steps
    s0, s1, _ = temme_sums(x, mu, eps, series_cap)
    l_prev = math.log(s0)
    if m_steps == 0:
        return l_prev
    l_cur = LN2 - math.log(x) + math.log(s1)
    for k in range(1, m_steps):
        eta = mu + k
        l_next = l_cur + math.log(2.0 * eta / x + math.exp(l_prev - l_cur))
        l_prev = l_cur
        l_cur = l_next
    return l_cur


@njit(cache=True, nogil=True)
def refined_log_bessel(x, nu, t0, t1, bins, small_x_threshold, eps, series_cap):
    """Hybrid log K: series below the threshold, fixed window otherwise."""
    if x < small_x_threshold:
        return temme_series_log(x, nu, eps, series_cap)
    shift, ln_sum = fixed_window_log_pair(x, nu, t0, t1, bins)
    return shift + ln_sum


@njit(cache=True, nogil=True)
def refined_log10_grid(nus, xs, t0, t1, bins, small_x_threshold, eps, series_cap, out):
    """Base-10 log K over the (nu, x) grid via the production evaluator."""
    for i in range(nus.shape[0]):
        for j in range(xs.shape[0]):
            x = xs[j]
            nu = nus[i]
            if x < small_x_threshold:
                ln_k = temme_series_log(x, nu, eps, series_cap)
                out[i, j] = ln_k * _INV_LN10_HI + ln_k * _INV_LN10_LO
            else:
                m_star = grid_peak_index(x, nu, t0, t1, bins)
                shift, ln_sum = window_lse(x, nu, t0, t1, bins, m_star)
                out[i, j] = assemble_log10(shift, ln_sum)


@njit(cache=True, nogil=True)
def pure_integral_log10_grid(nus, xs, t0, t1, bins, out):
    """Fixed-window quadrature applied everywhere, including below the
    series threshold (reproduces the integral method's small-x failure)."""
    for i in range(nus.shape[0]):
        for j in range(xs.shape[0]):
            m_star = grid_peak_index(xs[j], nus[i], t0, t1, bins)
            shift, ln_sum = window_lse(xs[j], nus[i], t0, t1, bins, m_star)
            out[i, j] = assemble_log10(shift, ln_sum)


@njit(cache=True, nogil=True)
def ln_to_log10(ln_k):
    """Natural to base-10 log with the shared double-double constant."""
    return ln_k * _INV_LN10_HI + ln_k * _INV_LN10_LO


@njit(cache=True, nogil=True)
def matern_tile(out, rx, ry, cx, cy, sigma_sq, beta, nu, log_prefactor,
                c_nodes, a_nodes, h, small_x_threshold, eps, series_cap):
    """Fill one covariance tile; out has shape (len(rx), len(cx)).

    c_nodes = cosh(t_m) and a_nodes = log cosh(nu t_m) are precomputed once
    per generation call, so the per-entry integrand reduces to one multiply
    and subtract per node plus the exponentials that survive the cutoff.
    Entries are independent; the loop order never affects values.
    """
    b = c_nodes.shape[0] - 1
    m = rx.shape[0]
    n = cx.shape[0]
    for i in range(m):
        for j in range(n):
            dx = rx[i] - cx[j]
            dy = ry[i] - cy[j]
            r = math.sqrt(dx * dx + dy * dy)
            if r == 0.0:
                out[i, j] = sigma_sq
                continue
            u = r / beta
            if u < small_x_threshold:
                ln_k = temme_series_log(u, nu, eps, series_cap)
            else:
                g_max = -math.inf
                m_star = 0
                for k in range(b + 1):
                    g = a_nodes[k] - u * c_nodes[k]
                    if g > g_max:
                        g_max = g
                        m_star = k
                acc = 0.0
                comp = 0.0
                for k in range(b + 1):
                    dg = (a_nodes[k] - a_nodes[m_star]) - u * (c_nodes[k] - c_nodes[m_star])
                    if dg > -46.0:
                        w = 0.5 if (k == 0 or k == b) else 1.0
                        y = w * math.exp(dg) - comp
                        t_acc = acc + y
                        comp = (t_acc - acc) - y
                        acc = t_acc
                ln_k = g_max + math.log(h * acc)
            out[i, j] = math.exp(log_prefactor + nu * math.log(u) + ln_k)
