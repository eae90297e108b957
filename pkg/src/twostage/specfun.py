"""Scalar special functions used by the estimators.

Double precision throughout. The compiled kernel carries C twins of these
routines; this module is the reference path and the fallback.
"""

import math

from .errors import DomainError

INV_SQRT_2PI = 0.3989422804014327
SQRT_2_OVER_PI = 0.7978845608028654
_INV_SQRT2 = 0.7071067811865476

_MILLS_SWITCH = -8.0
_MILLS_TERMS = 120

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 100000


def norm_pdf(x):
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


def norm_cdf(x):
    # erfc keeps full relative accuracy in the lower tail
    return 0.5 * math.erfc(-x * _INV_SQRT2)


def mills_hazard(x):
    """phi(x) / Phi(x), stable for all finite x.

    Below -8 the ratio is evaluated from the continued fraction of the
    Mills ratio, R(t) = 1/(t + 1/(t + 2/(t + 3/(t + ...)))) with t = -x,
    whose reciprocal is the hazard. Nothing underflows there.
    """
    if x >= _MILLS_SWITCH:
        return norm_pdf(x) / norm_cdf(x)
    t = -x
    tail = t
    for k in range(_MILLS_TERMS, 0, -1):
        tail = t + k / tail
    return tail


def log_gamma(x):
    if not x > 0.0:
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def log_beta(a, b):
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"log_beta requires a, b > 0, got ({a!r}, {b!r})")
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a, b, x):
    """Continued-fraction part of I_x(a, b) (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}")


def _check_beta_args(a, b, x):
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"reg_inc_beta requires a, b > 0, got ({a!r}, {b!r})")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"reg_inc_beta requires 0 <= x <= 1, got {x!r}")


_LOG_SQRT_2PI = 0.9189385332046728
_STIRLING = (1.0 / 12, -1.0 / 360, 1.0 / 1260, -1.0 / 1680, 1.0 / 1188,
             -691.0 / 360360, 1.0 / 156, -3617.0 / 122400)
_LARGE_SHAPE = 10.0


def _stirling_remainder(x):
    """lgamma(x) - [(x - 1/2) log x - x + log sqrt(2 pi)], for x >= 10."""
    inv = 1.0 / x
    inv2 = inv * inv
    acc = 0.0
    for coef in reversed(_STIRLING):
        acc = acc * inv2 + coef
    return acc * inv


def _x_minus_log1p(t):
    """t - log(1 + t) without cancellation near 0."""
    if abs(t) > 0.1:
        return t - math.log1p(t)
    term = t
    acc = 0.0
    for k in range(2, 40):
        term *= -t
        acc -= term / k
        if abs(term) < 1e-17 * abs(acc):
            break
    return acc


def _log_front(a, b, x):
    """log(x^a (1-x)^b / B(a, b)).

    For large shapes the direct sum cancels badly; expand instead around
    the mode x0 = a/(a+b), where the linear terms cancel analytically.
    """
    if min(a, b) < _LARGE_SHAPE:
        return a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)
    n = a + b
    x0 = a / n
    y0 = b / n
    e = x - x0
    t1 = e / x0
    t2 = -e / y0
    if abs(t1) <= 0.1 and abs(t2) <= 0.1:
        deviation = -a * _x_minus_log1p(t1) - b * _x_minus_log1p(t2)
    else:
        deviation = a * math.log(x / x0) + b * (math.log1p(-x) - math.log(y0))
    remainder = _stirling_remainder(a) + _stirling_remainder(b) - _stirling_remainder(n)
    return deviation + 0.5 * math.log(a * y0) - _LOG_SQRT_2PI - remainder


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    _check_beta_args(a, b, x)
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(_log_front(a, b, x)) * _betacf(a, b, x) / a
    y = 1.0 - x
    return 1.0 - math.exp(_log_front(b, a, y)) * _betacf(b, a, y) / b


def log_reg_inc_beta(a, b, x):
    """log I_x(a, b) without underflow in the lower tail."""
    _check_beta_args(a, b, x)
    if x == 0.0:
        return -math.inf
    if x == 1.0:
        return 0.0
    if x < (a + 1.0) / (a + b + 2.0):
        return _log_front(a, b, x) + math.log(_betacf(a, b, x)) - math.log(a)
    y = 1.0 - x
    return math.log1p(-math.exp(_log_front(b, a, y)) * _betacf(b, a, y) / b)
