# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernel and C twins of the scalar special functions."""

from libc.math cimport exp, log, log1p, sqrt, erfc, fabs, lgamma, INFINITY

import numpy as np
cimport numpy as cnp

from .errors import DegenerateData

cnp.import_array()

BACKEND = "cython"

cdef double INV_SQRT_2PI = 0.3989422804014327
cdef double INV_SQRT2 = 0.7071067811865476
cdef double LOG2 = 0.6931471805599453
cdef double DEGENERACY_RTOL = 1e-12
cdef double V_STAR_FLOOR = 1e-10
cdef double CF_EPS = 1e-16
cdef double CF_TINY = 1e-300
cdef int CF_MAX_ITER = 100000
cdef int MILLS_TERMS = 120

# status codes
cdef int OK = 0
cdef int BAD_RSS = 1
cdef int BAD_V = 2
cdef int BAD_VSTAR = 3
cdef int BAD_POOLED = 4
cdef int NO_CONVERGENCE = 5


cdef inline double _norm_pdf(double x) nogil:
    return INV_SQRT_2PI * exp(-0.5 * x * x)


cdef inline double _norm_cdf(double x) nogil:
    return 0.5 * erfc(-x * INV_SQRT2)


cdef inline double _mills_hazard(double x) nogil:
    cdef double t, tail
    cdef int k
    if x >= -8.0:
        return _norm_pdf(x) / _norm_cdf(x)
    t = -x
    tail = t
    for k in range(MILLS_TERMS, 0, -1):
        tail = t + k / tail
    return tail


cdef double _betacf(double a, double b, double x, int* status) nogil:
    cdef double qab = a + b, qap = a + 1.0, qam = a - 1.0
    cdef double c = 1.0, d, h, aa, delta
    cdef int m, m2
    d = 1.0 - qab * x / qap
    if fabs(d) < CF_TINY:
        d = CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < CF_TINY:
            d = CF_TINY
        c = 1.0 + aa / c
        if fabs(c) < CF_TINY:
            c = CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < CF_TINY:
            d = CF_TINY
        c = 1.0 + aa / c
        if fabs(c) < CF_TINY:
            c = CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < CF_EPS:
            return h
    status[0] = NO_CONVERGENCE
    return h


cdef double LOG_SQRT_2PI = 0.9189385332046728
cdef double LARGE_SHAPE = 10.0
cdef double[8] STIRLING = [1.0 / 12, -1.0 / 360, 1.0 / 1260, -1.0 / 1680, 1.0 / 1188,
                           -691.0 / 360360, 1.0 / 156, -3617.0 / 122400]


cdef inline double _stirling_remainder(double x) nogil:
    cdef double inv = 1.0 / x
    cdef double inv2 = inv * inv
    cdef double acc = 0.0
    cdef int i
    for i in range(7, -1, -1):
        acc = acc * inv2 + STIRLING[i]
    return acc * inv


cdef inline double _x_minus_log1p(double t) nogil:
    cdef double term = t, acc = 0.0
    cdef int k
    if fabs(t) > 0.1:
        return t - log1p(t)
    for k in range(2, 40):
        term *= -t
        acc -= term / k
        if fabs(term) < 1e-17 * fabs(acc):
            break
    return acc


cdef double _log_front(double a, double b, double x, double lbeta) nogil:
    # lbeta is only used below the large-shape switch
    cdef double n, x0, y0, e, t1, t2, deviation, remainder
    if a < LARGE_SHAPE or b < LARGE_SHAPE:
        return a * log(x) + b * log1p(-x) - lbeta
    n = a + b
    x0 = a / n
    y0 = b / n
    e = x - x0
    t1 = e / x0
    t2 = -e / y0
    if fabs(t1) <= 0.1 and fabs(t2) <= 0.1:
        deviation = -a * _x_minus_log1p(t1) - b * _x_minus_log1p(t2)
    else:
        deviation = a * log(x / x0) + b * (log1p(-x) - log(y0))
    remainder = _stirling_remainder(a) + _stirling_remainder(b) - _stirling_remainder(n)
    return deviation + 0.5 * log(a * y0) - LOG_SQRT_2PI - remainder


cdef double _log_reg_inc_beta(double a, double b, double x, double lbeta, int* status) nogil:
    # lbeta = log B(a, b), symmetric in (a, b)
    cdef double y
    if x == 0.0:
        return -INFINITY
    if x == 1.0:
        return 0.0
    if x < (a + 1.0) / (a + b + 2.0):
        return _log_front(a, b, x, lbeta) + log(_betacf(a, b, x, status)) - log(a)
    y = 1.0 - x
    return log1p(-exp(_log_front(b, a, y, lbeta)) * _betacf(b, a, y, status) / b)


cdef double _umvcue_correction(double v_star, double c, double lbeta_cc, int* status) nogil:
    cdef double log_num, log_den
    if v_star >= 1.0:
        return 0.0
    if v_star + 1.0 < V_STAR_FLOOR:
        status[0] = BAD_VSTAR
        return 0.0
    log_num = c * log1p(-v_star * v_star)
    log_den = (2.0 * c * LOG2 + log(c) + lbeta_cc
               + _log_reg_inc_beta(c, c, 0.5 * (v_star + 1.0), lbeta_cc, status))
    return -exp(log_num - log_den)


cdef inline double _plugin_u1(double z1, double z2, double sig) nogil:
    return z1 + sig * _mills_hazard((z1 - z2) / sig)


cdef inline double _plugin_u2(double z1, double z2, double sig, int n1, int n2) nogil:
    cdef int n_all = 2 * n1 + n2
    cdef double pooled_mean = ((n1 + n2) * z1 + n1 * z2) / n_all
    cdef double t, a, cdf_t, cdf_a
    if z1 <= z2:
        return pooled_mean
    t = (z1 - z2) / sig
    a = n1 * (z1 - z2) / (n_all * sig)
    cdf_t = _norm_cdf(t)
    cdf_a = _norm_cdf(a)
    return (pooled_mean * (cdf_t - cdf_a) / cdf_t
            + (sig * _norm_pdf(a) + z1 * cdf_a) / cdf_t)


# -- python-visible twins, for cross-checking against the reference path ---

def norm_pdf(double x):
    return _norm_pdf(x)


def norm_cdf(double x):
    return _norm_cdf(x)


def mills_hazard(double x):
    return _mills_hazard(x)


def log_reg_inc_beta(double a, double b, double x):
    cdef int status = OK
    cdef double lb = lgamma(a) + lgamma(b) - lgamma(a + b)
    cdef double r = _log_reg_inc_beta(a, b, x, lb, &status)
    if status != OK:
        raise ArithmeticError("incomplete beta continued fraction did not converge")
    return r


def umvcue_correction(double v_star, double c):
    cdef int status = OK
    cdef double r = _umvcue_correction(v_star, c, 2.0 * lgamma(c) - lgamma(2.0 * c), &status)
    if status == BAD_VSTAR:
        raise DegenerateData(f"v_star = {v_star!r} too close to -1")
    if status != OK:
        raise ArithmeticError("incomplete beta continued fraction did not converge")
    return r


_MESSAGES = {
    BAD_RSS: "residual sum of squares is degenerate",
    BAD_V: "V is at or below -1",
    BAD_VSTAR: "v_star too close to -1",
    BAD_POOLED: "pooled variance is zero",
}


def estimate_batch(xbar1, xbar2, ybar, within_ss, int n1, int n2, kinds, ms):
    """Evaluate estimators on a batch of replications.

    Same contract as the pure-Python kernel: returns ``(q, est)``.
    """
    cdef const double[::1] x1 = np.ascontiguousarray(xbar1, dtype=np.float64)
    cdef const double[::1] x2 = np.ascontiguousarray(xbar2, dtype=np.float64)
    cdef const double[::1] yb = np.ascontiguousarray(ybar, dtype=np.float64)
    cdef const double[::1] ws = np.ascontiguousarray(within_ss, dtype=np.float64)
    cdef const long[::1] kk = np.ascontiguousarray(kinds, dtype=np.int_)
    cdef const long[::1] mm = np.ascontiguousarray(ms, dtype=np.int_)
    cdef Py_ssize_t reps = x1.shape[0]
    cdef Py_ssize_t nk = kk.shape[0]
    q_arr = np.empty(reps, dtype=np.int8)
    est_arr = np.empty((nk, reps), dtype=np.float64)
    cdef signed char[::1] q = q_arr
    cdef double[:, ::1] est = est_arr

    cdef double c = (2 * n1 + n2 - 3) / 2.0
    cdef double lbeta_cc = 2.0 * lgamma(c) - lgamma(2.0 * c)
    cdef double k_fac = n2 * (n1 + n2) / <double>n1
    cdef double v_fac = sqrt(n1 * (n1 + n2) / <double>n2)
    cdef double u_fac = sqrt(n1 / <double>(n2 * (n1 + n2)))
    cdef double sig_fac = sqrt(n2 / <double>(n1 * (n1 + n2)))
    cdef int df = 2 * n1 + n2 - 3
    cdef int n12 = n1 + n2
    cdef Py_ssize_t r, j
    cdef Py_ssize_t bad = -1
    cdef int status = OK
    cdef int qq
    cdef double xq, xo, z, z1, st2, raw, v, vs, s_tilde, sig, corr

    with nogil:
        for r in range(reps):
            if x1[r] > x2[r]:
                qq = 1
                xq = x1[r]
                xo = x2[r]
            else:
                qq = 2
                xq = x2[r]
                xo = x1[r]
            q[r] = qq
            z = n1 * xq + n2 * yb[r]
            z1 = z / n12
            st2 = ws[r] + k_fac * (yb[r] - z1) * (yb[r] - z1)
            raw = ws[r] + n1 * xq * xq + n1 * xo * xo + n2 * yb[r] * yb[r]
            if not (st2 > DEGENERACY_RTOL * raw) or st2 <= 0.0:
                status = BAD_RSS
            s_tilde = sqrt(st2)
            v = v_fac * (z1 - xo) / s_tilde
            if status == OK and v <= -1.0 + DEGENERACY_RTOL:
                status = BAD_V
            vs = v if v < 1.0 else 1.0
            sig = sig_fac * sqrt(ws[r] / df)
            for j in range(nk):
                if status != OK:
                    break
                if kk[j] == 0:
                    est[j, r] = z1
                elif kk[j] == 1:
                    corr = _umvcue_correction(vs, c, lbeta_cc, &status)
                    est[j, r] = z1 + u_fac * s_tilde * corr
                elif kk[j] == 2:
                    if not sig > 0.0:
                        status = BAD_POOLED
                    else:
                        est[j, r] = _plugin_u1(z1, xo, sig)
                elif kk[j] == 3:
                    if not sig > 0.0:
                        status = BAD_POOLED
                    else:
                        est[j, r] = _plugin_u2(z1, xo, sig, n1, n2)
                else:
                    est[j, r] = z / (n12 + 1.0 / mm[j])
            if status != OK:
                bad = r
                break

    if bad >= 0:
        if status == NO_CONVERGENCE:
            raise ArithmeticError(f"incomplete beta continued fraction did not converge (replication {bad})")
        raise DegenerateData(_MESSAGES[status], replication=bad)
    return q_arr, est_arr
