# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled quadrature kernel; see ``_kernels_py`` for the reference algorithm.

Every statement mirrors the pure-Python module so the two paths agree to
rounding. The integration loop runs without the GIL.
"""

from libc.math cimport exp, log, log1p, expm1, sqrt, pow, fabs
from libc.stdlib cimport malloc, free

from ._kernels_py import GL_NODES, GL_WEIGHTS, TAIL_MASS, GEOMETRIC_RATIO, N_GEOMETRIC

cdef double _nodes[15]
cdef double _weights[15]
for _i in range(15):
    _nodes[_i] = GL_NODES[_i]
    _weights[_i] = GL_WEIGHTS[_i]

cdef double _TAIL_MASS = TAIL_MASS
cdef double _RATIO = GEOMETRIC_RATIO
cdef int _NGEO = N_GEOMETRIC
cdef double _LOG2 = log(2.0)
cdef double _LOG_SQRT_PI = 0.5 * log(3.141592653589793)
cdef double _TWO_OVER_SQRT_PI = 2.0 / sqrt(3.141592653589793)
cdef double _EPS = 2.220446049250313e-16
cdef double _TINY = 1e-300
cdef int _MAX_ITER = 500


cdef double _erf_series(double x) noexcept nogil:
    cdef double x2 = x * x
    cdef double term = 1.0
    cdef double total = 1.0
    cdef int n = 0
    while True:
        n += 1
        term *= 2.0 * x2 / (2 * n + 1)
        total += term
        if term < total * _EPS:
            break
    return _TWO_OVER_SQRT_PI * x * exp(-x2) * total


cdef double _erfc_cf_denominator(double x) noexcept nogil:
    cdef double f = x
    cdef double c = x
    cdef double d = 0.0
    cdef double a, delta
    cdef int n
    for n in range(1, _MAX_ITER):
        a = 0.5 * n
        d = x + a * d
        if d == 0.0:
            d = _TINY
        c = x + a / c
        if c == 0.0:
            c = _TINY
        d = 1.0 / d
        delta = c * d
        f *= delta
        if fabs(delta - 1.0) < _EPS:
            break
    return f


cdef double _log_gamma_series(double s, double x, double lg_s1) noexcept nogil:
    cdef double term = 1.0
    cdef double total = 1.0
    cdef double a = s
    cdef int it
    for it in range(_MAX_ITER * 4):
        a += 1.0
        term *= x / a
        total += term
        if term < total * _EPS:
            break
    return s * log(x) - x - lg_s1 + log(total)


cdef double _log_gamma_cf(double s, double x, double lg_s) noexcept nogil:
    cdef double b = x + 1.0 - s
    cdef double c = 1.0 / _TINY
    cdef double d = 1.0 / b
    cdef double h = d
    cdef double an, delta
    cdef int i
    for i in range(1, _MAX_ITER):
        an = -(<double>i) * (i - s)
        b += 2.0
        d = an * d + b
        if fabs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if fabs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < _EPS:
            break
    return s * log(x) - x - lg_s + log(h)


cdef void _log_cdf_sf(double x, int df, double lg_s, double lg_s1,
                      double* logcdf, double* logsf) noexcept nogil:
    cdef double z, e, den, h, s, y
    if df == 1:
        z = sqrt(0.5 * x)
        if z < 2.0:
            e = _erf_series(z)
            logsf[0] = log(1.0 - e)
            logcdf[0] = log(e)
        else:
            den = _erfc_cf_denominator(z)
            logsf[0] = -z * z - _LOG_SQRT_PI - log(den)
            logcdf[0] = log1p(-exp(logsf[0]))
        return
    if df == 2:
        h = 0.5 * x
        logsf[0] = -h
        if h < 0.6931:
            logcdf[0] = log(-expm1(-h))
        else:
            logcdf[0] = log1p(-exp(-h))
        return
    s = 0.5 * df
    y = 0.5 * x
    if y < s + 1.0:
        logcdf[0] = _log_gamma_series(s, y, lg_s1)
        logsf[0] = log1p(-exp(logcdf[0]))
    else:
        logsf[0] = _log_gamma_cf(s, y, lg_s)
        logcdf[0] = log1p(-exp(logsf[0]))


cdef double _log_density(double x, long N, long r, int df, double logcoef,
                         double lognorm, double lg_s, double lg_s1) noexcept nogil:
    cdef double logcdf, logsf, out
    _log_cdf_sf(x, df, lg_s, lg_s1, &logcdf, &logsf)
    out = logcoef + (0.5 * df - 1.0) * log(x) - 0.5 * x + lognorm
    if N - r > 0:
        out += (N - r) * logcdf
    if r - 1 > 0:
        out += (r - 1) * logsf
    return out


cdef double _upper_limit(long N, int df, double lg_s, double lg_s1) noexcept nogil:
    cdef double target = log(_TAIL_MASS) - log(<double>N)
    cdef double lo = 0.0
    cdef double hi = 8.0 * df + 16.0
    cdef double mid, lc, ls
    cdef int it
    _log_cdf_sf(hi, df, lg_s, lg_s1, &lc, &ls)
    while ls > target:
        lo = hi
        hi *= 2.0
        _log_cdf_sf(hi, df, lg_s, lg_s1, &lc, &ls)
    for it in range(200):
        mid = 0.5 * (lo + hi)
        _log_cdf_sf(mid, df, lg_s, lg_s1, &lc, &ls)
        if ls > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return hi


cdef double _gl(double a, double b, long N, long r, int df, double logcoef,
                double lognorm, double lg_s, double lg_s1) noexcept nogil:
    cdef double half = 0.5 * (b - a)
    cdef double mid = 0.5 * (a + b)
    cdef double total = 0.0
    cdef double u, x, lg
    cdef int i
    for i in range(15):
        u = mid + half * _nodes[i]
        x = u * u
        lg = _LOG2 + 3.0 * log(u) + _log_density(x, N, r, df, logcoef, lognorm, lg_s, lg_s1)
        total += _weights[i] * exp(lg)
    return half * total


def log_density(double x, long N, long r, int df, double logcoef, double lognorm,
                double lg_s, double lg_s1):
    return _log_density(x, N, r, df, logcoef, lognorm, lg_s, lg_s1)


def upper_limit(long N, int df, double lg_s, double lg_s1):
    return _upper_limit(N, df, lg_s, lg_s1)


def expected_order_stat(long N, long r, int df, double logcoef, double lognorm,
                        double lg_s, double lg_s1, double tol, int max_panels,
                        double x_max):
    """Return (value, error_estimate, n_panels, converged)."""
    cdef int n_init = _NGEO + 1
    cdef int cap = max_panels if max_panels > n_init else n_init
    cdef double* lefts = <double*>malloc(cap * sizeof(double))
    cdef double* rights = <double*>malloc(cap * sizeof(double))
    cdef double* values = <double*>malloc(cap * sizeof(double))
    cdef double* errors = <double*>malloc(cap * sizeof(double))
    cdef int* order = <int*>malloc(cap * sizeof(int))
    if lefts == NULL or rights == NULL or values == NULL or errors == NULL or order == NULL:
        free(lefts); free(rights); free(values); free(errors); free(order)
        raise MemoryError()

    cdef double x_hi, u_hi, a, b, c, m, whole, halves, total_err, value, err
    cdef double a2, b2, h2, e2
    cdef int i, j, n, worst, key
    cdef bint converged = False
    cdef double prev_edge, edge

    with nogil:
        x_hi = _upper_limit(N, df, lg_s, lg_s1)
        if 0.0 < x_max < x_hi:
            x_hi = x_max
        u_hi = sqrt(x_hi)

        n = 0
        prev_edge = 0.0
        for j in range(_NGEO, -1, -1):
            edge = u_hi * pow(_RATIO, <double>j)
            a = prev_edge
            b = edge
            c = 0.5 * (a + b)
            whole = _gl(a, b, N, r, df, logcoef, lognorm, lg_s, lg_s1)
            halves = (_gl(a, c, N, r, df, logcoef, lognorm, lg_s, lg_s1)
                      + _gl(c, b, N, r, df, logcoef, lognorm, lg_s, lg_s1))
            lefts[n] = a
            rights[n] = b
            values[n] = halves
            errors[n] = fabs(whole - halves)
            n += 1
            prev_edge = edge

        while True:
            total_err = 0.0
            worst = 0
            for i in range(n):
                total_err += errors[i]
                if errors[i] > errors[worst]:
                    worst = i
            if total_err <= tol:
                converged = True
                break
            if n >= max_panels or n >= cap:
                break
            a = lefts[worst]
            b = rights[worst]
            c = 0.5 * (a + b)
            if not (a < c and c < b):
                break
            # left half replaces the worst panel, right half is appended
            m = 0.5 * (a + c)
            whole = _gl(a, c, N, r, df, logcoef, lognorm, lg_s, lg_s1)
            halves = (_gl(a, m, N, r, df, logcoef, lognorm, lg_s, lg_s1)
                      + _gl(m, c, N, r, df, logcoef, lognorm, lg_s, lg_s1))
            a2 = c
            b2 = b
            m = 0.5 * (a2 + b2)
            h2 = (_gl(a2, m, N, r, df, logcoef, lognorm, lg_s, lg_s1)
                  + _gl(m, b2, N, r, df, logcoef, lognorm, lg_s, lg_s1))
            e2 = fabs(_gl(a2, b2, N, r, df, logcoef, lognorm, lg_s, lg_s1) - h2)
            lefts[worst] = a
            rights[worst] = c
            values[worst] = halves
            errors[worst] = fabs(whole - halves)
            lefts[n] = a2
            rights[n] = b2
            values[n] = h2
            errors[n] = e2
            n += 1

        # insertion sort of panel indices by left edge
        for i in range(n):
            order[i] = i
        for i in range(1, n):
            key = order[i]
            j = i - 1
            while j >= 0 and lefts[order[j]] > lefts[key]:
                order[j + 1] = order[j]
                j -= 1
            order[j + 1] = key
        value = 0.0
        err = 0.0
        for i in range(n):
            value += values[order[i]]
            err += errors[order[i]]

    free(lefts); free(rights); free(values); free(errors); free(order)
    return value, err, n, bool(converged)
