"""Pure-Python quadrature kernel for chi-square order-statistic expectations.

Mirrors ``_kernels.pyx`` statement for statement; used when the compiled
extension is unavailable or ``SRIC_PURE_PYTHON=1`` is set.

The integral E[X_(r|N)] = int x p_(r)(x) dx is taken in u = sqrt(x), which
makes the integrand smooth at the origin for every df. It is split into
geometric panels below u_hi and refined globally (worst panel first) with
15-point Gauss-Legendre against its two half-panels.
"""

import math

from numpy.polynomial.legendre import leggauss

from .special_functions import _erf_series, _erfc_cf_denominator

_nodes, _weights = leggauss(15)
GL_NODES = tuple(float(v) for v in _nodes)
GL_WEIGHTS = tuple(float(v) for v in _weights)
del _nodes, _weights

TAIL_MASS = 1e-14
GEOMETRIC_RATIO = 0.25
N_GEOMETRIC = 18
_LOG2 = math.log(2.0)
_LOG_SQRT_PI = 0.5 * math.log(math.pi)
_EPS = 2.220446049250313e-16
_TINY = 1e-300
_MAX_ITER = 500


def _log_gamma_series(s, x, lg_s1):
    term = 1.0
    total = 1.0
    a = s
    for _ in range(_MAX_ITER * 4):
        a += 1.0
        term *= x / a
        total += term
        if term < total * _EPS:
            break
    return s * math.log(x) - x - lg_s1 + math.log(total)


def _log_gamma_cf(s, x, lg_s):
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return s * math.log(x) - x - lg_s + math.log(h)


def log_cdf_sf(x, df, lg_s, lg_s1):
    """(log F, log(1 - F)) of chi-square(df) at x > 0."""
    if df == 1:
        z = math.sqrt(0.5 * x)
        if z < 2.0:
            e = _erf_series(z)
            logsf = math.log(1.0 - e)
            logcdf = math.log(e)
        else:
            den = _erfc_cf_denominator(z)
            logsf = -z * z - _LOG_SQRT_PI - math.log(den)
            logcdf = math.log1p(-math.exp(logsf))
        return logcdf, logsf
    if df == 2:
        h = 0.5 * x
        logsf = -h
        logcdf = math.log(-math.expm1(-h)) if h < 0.6931 else math.log1p(-math.exp(-h))
        return logcdf, logsf
    s = 0.5 * df
    y = 0.5 * x
    if y < s + 1.0:
        logcdf = _log_gamma_series(s, y, lg_s1)
        logsf = math.log1p(-math.exp(logcdf))
    else:
        logsf = _log_gamma_cf(s, y, lg_s)
        logcdf = math.log1p(-math.exp(logsf))
    return logcdf, logsf


def log_density(x, N, r, df, logcoef, lognorm, lg_s, lg_s1):
    """log p_(r|N)(x), rank 1 = maximum."""
    logcdf, logsf = log_cdf_sf(x, df, lg_s, lg_s1)
    out = logcoef + (0.5 * df - 1.0) * math.log(x) - 0.5 * x + lognorm
    if N - r > 0:
        out += (N - r) * logcdf
    if r - 1 > 0:
        out += (r - 1) * logsf
    return out


def upper_limit(N, df, lg_s, lg_s1):
    """x with N * (1 - F(x)) = TAIL_MASS, by bracketing then bisection."""
    target = math.log(TAIL_MASS) - math.log(N)
    lo = 0.0
    hi = 8.0 * df + 16.0
    while log_cdf_sf(hi, df, lg_s, lg_s1)[1] > target:
        lo = hi
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if log_cdf_sf(mid, df, lg_s, lg_s1)[1] > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return hi


def _gl(a, b, N, r, df, logcoef, lognorm, lg_s, lg_s1):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    total = 0.0
    for i in range(15):
        u = mid + half * GL_NODES[i]
        x = u * u
        lg = _LOG2 + 3.0 * math.log(u) + log_density(x, N, r, df, logcoef, lognorm, lg_s, lg_s1)
        total += GL_WEIGHTS[i] * math.exp(lg)
    return half * total


def expected_order_stat(N, r, df, logcoef, lognorm, lg_s, lg_s1, tol, max_panels, x_max):
    """Return (value, error_estimate, n_panels, converged).

    ``x_max <= 0`` means no cap on the automatic upper limit.
    """
    x_hi = upper_limit(N, df, lg_s, lg_s1)
    if 0.0 < x_max < x_hi:
        x_hi = x_max
    u_hi = math.sqrt(x_hi)
    args = (N, r, df, logcoef, lognorm, lg_s, lg_s1)

    edges = [0.0]
    for j in range(N_GEOMETRIC, -1, -1):
        edges.append(u_hi * GEOMETRIC_RATIO**j)
    lefts = []
    rights = []
    values = []
    errors = []
    for i in range(len(edges) - 1):
        a = edges[i]
        b = edges[i + 1]
        c = 0.5 * (a + b)
        whole = _gl(a, b, *args)
        halves = _gl(a, c, *args) + _gl(c, b, *args)
        lefts.append(a)
        rights.append(b)
        values.append(halves)
        errors.append(abs(whole - halves))

    converged = False
    while True:
        total_err = 0.0
        worst = 0
        for i in range(len(errors)):
            total_err += errors[i]
            if errors[i] > errors[worst]:
                worst = i
        if total_err <= tol:
            converged = True
            break
        if len(errors) >= max_panels:
            break
        a = lefts[worst]
        b = rights[worst]
        c = 0.5 * (a + b)
        if not (a < c < b):
            break
        new = []
        for lo, hi in ((a, c), (c, b)):
            m = 0.5 * (lo + hi)
            whole = _gl(lo, hi, *args)
            halves = _gl(lo, m, *args) + _gl(m, hi, *args)
            new.append((lo, hi, halves, abs(whole - halves)))
        lefts[worst], rights[worst], values[worst], errors[worst] = new[0]
        lefts.append(new[1][0])
        rights.append(new[1][1])
        values.append(new[1][2])
        errors.append(new[1][3])

    order = sorted(range(len(lefts)), key=lefts.__getitem__)
    value = 0.0
    err = 0.0
    for i in order:
        value += values[i]
        err += errors[i]
    return value, err, len(lefts), converged
