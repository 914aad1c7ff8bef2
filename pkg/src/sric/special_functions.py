"""Scalar special functions for chi-square computations.

Error function, lower incomplete gamma (with the half-integer recurrence and
its closed forms), chi-square density / distribution and their log variants,
and the log of the order-statistic rank coefficient.

Everything here is plain ``math`` on Python floats. The same algorithms are
mirrored in the compiled kernel so both quadrature paths agree bit for bit.
"""

import math

from .errors import DomainError, PoleError

_EPS = 2.220446049250313e-16
_TINY = 1e-300
_SQRT_PI = math.sqrt(math.pi)
_LOG_SQRT_PI = 0.5 * math.log(math.pi)
_TWO_OVER_SQRT_PI = 2.0 / _SQRT_PI
_ERF_SWITCH = 2.0
_MAX_ITER = 500


def _erf_series(x):
    # erf(x) = 2x/sqrt(pi) e^{-x^2} sum (2x^2)^n / (2n+1)!!  -- all terms positive
    x2 = x * x
    term = 1.0
    total = 1.0
    n = 0
    while True:
        n += 1
        term *= 2.0 * x2 / (2 * n + 1)
        total += term
        if term < total * _EPS:
            break
    return _TWO_OVER_SQRT_PI * x * math.exp(-x2) * total


def _erfc_cf_denominator(x):
    """Modified Lentz evaluation of x + (1/2)/(x + 1/(x + (3/2)/(x + ...))).

    Valid for x >= 2, where erfc(x) = exp(-x^2) / (sqrt(pi) * denominator).
    """
    f = x
    c = x
    d = 0.0
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
        if abs(delta - 1.0) < _EPS:
            break
    return f


def erf(x):
    """Error function ``(2/sqrt(pi)) * integral_0^x exp(-t^2) dt``.

    Uses the positive-term series below |x| = 2 and the erfc continued
    fraction above it. Absolute error is around 1e-16.
    """
    ax = abs(x)
    if ax < _ERF_SWITCH:
        return _erf_series(x)
    if ax > 6.0:
        v = 1.0
    else:
        v = 1.0 - math.exp(-ax * ax) / (_SQRT_PI * _erfc_cf_denominator(ax))
    return v if x > 0 else -v


def erfc(x):
    """Complementary error function, accurate in the upper tail."""
    if x < _ERF_SWITCH:
        return 1.0 - erf(x)
    if x > 27.3:
        return 0.0
    return math.exp(-x * x) / (_SQRT_PI * _erfc_cf_denominator(x))


def log_erfc(x):
    """``log(erfc(x))`` without underflow for large positive x."""
    if x < _ERF_SWITCH:
        return math.log(1.0 - erf(x))
    return -x * x - _LOG_SQRT_PI - math.log(_erfc_cf_denominator(x))


# -- incomplete gamma -------------------------------------------------------


def _check_gamma_args(s, x):
    if not s > 0:
        raise DomainError(f"incomplete gamma requires s > 0, got {s!r}")
    if not x >= 0:
        raise DomainError(f"incomplete gamma requires x >= 0, got {x!r}")


def _log_gamma_series(s, x):
    # log P(s, x) via the power series, for x < s + 1
    term = 1.0
    total = 1.0
    a = s
    for _ in range(_MAX_ITER * 4):
        a += 1.0
        term *= x / a
        total += term
        if term < total * _EPS:
            break
    return s * math.log(x) - x - math.lgamma(s + 1.0) + math.log(total)


def _log_gamma_cf(s, x):
    # log Q(s, x) via the Legendre continued fraction (modified Lentz), x >= s + 1
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
    return s * math.log(x) - x - math.lgamma(s) + math.log(h)


def log_regularized_lower_gamma(s, x):
    """``log P(s, x)`` where ``P = gamma(s, x) / Gamma(s)``."""
    _check_gamma_args(s, x)
    if x == 0.0:
        return -math.inf
    if x < s + 1.0:
        return _log_gamma_series(s, x)
    q = math.exp(_log_gamma_cf(s, x))
    return math.log1p(-q)


def log_regularized_upper_gamma(s, x):
    """``log Q(s, x)`` where ``Q = 1 - P``."""
    _check_gamma_args(s, x)
    if x == 0.0:
        return 0.0
    if x < s + 1.0:
        p = math.exp(_log_gamma_series(s, x))
        return math.log1p(-p)
    return _log_gamma_cf(s, x)


def regularized_lower_gamma(s, x):
    _check_gamma_args(s, x)
    if x == 0.0:
        return 0.0
    if x < s + 1.0:
        return math.exp(_log_gamma_series(s, x))
    return -math.expm1(_log_gamma_cf(s, x))


def regularized_upper_gamma(s, x):
    _check_gamma_args(s, x)
    if x == 0.0:
        return 1.0
    if x < s + 1.0:
        return -math.expm1(_log_gamma_series(s, x))
    return math.exp(_log_gamma_cf(s, x))


def lower_incomplete_gamma(s, x):
    """Lower incomplete gamma ``gamma(s, x) = integral_0^x t^(s-1) e^(-t) dt``.

    Series below ``x = s + 1``, complement of the upper continued fraction
    above, which keeps the tail free of cancellation.
    """
    _check_gamma_args(s, x)
    if s < 170.0:
        return math.gamma(s) * regularized_lower_gamma(s, x)
    return math.exp(math.lgamma(s) + log_regularized_lower_gamma(s, x))


def lower_gamma_recurrence(k, y):
    """``gamma(k/2, y)`` for a positive integer ``k`` by upward recurrence.

    Starts from ``gamma(1, y) = 1 - e^-y`` (even k) or
    ``gamma(1/2, y) = sqrt(pi) erf(sqrt(y))`` (odd k) and applies
    ``gamma(s + 1, y) = s gamma(s, y) - y^s e^-y``.
    """
    if k < 1 or int(k) != k:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    if y < 0:
        raise DomainError(f"y must be >= 0, got {y!r}")
    k = int(k)
    if k % 2 == 0:
        s = 1.0
        g = -math.expm1(-y)
    else:
        s = 0.5
        g = _SQRT_PI * erf(math.sqrt(y))
    ey = math.exp(-y)
    target = 0.5 * k
    while s < target:
        g = s * g - y**s * ey
        s += 1.0
    return g


def _double_factorial(n):
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def lower_gamma_closed_form(k, y):
    """``gamma(k/2, y)`` from the unrolled recurrence.

    even k, n = k/2:      (n-1)! [1 - e^-y sum_{j=0}^{n-1} y^j / j!]
    odd k,  n = (k-1)/2:  (k-2)!!/2^n sqrt(pi) erf(sqrt(y))
                          - e^-y sum_{j=1}^{n} (k-2)!! / (2^(n-j) (2j-1)!!) y^(j-1/2)
    """
    if k < 1 or int(k) != k:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    if y < 0:
        raise DomainError(f"y must be >= 0, got {y!r}")
    k = int(k)
    ey = math.exp(-y)
    if k % 2 == 0:
        n = k // 2
        partial = math.fsum(y**j / math.factorial(j) for j in range(n))
        return math.factorial(n - 1) * (1.0 - ey * partial)
    n = (k - 1) // 2
    dfk = _double_factorial(k - 2)
    lead = dfk / 2.0**n * _SQRT_PI * erf(math.sqrt(y))
    tail = math.fsum(
        dfk / (2.0 ** (n - j) * _double_factorial(2 * j - 1)) * y ** (j - 0.5)
        for j in range(1, n + 1)
    )
    return lead - ey * tail


# -- chi-square -------------------------------------------------------------


def _check_df(df):
    if df < 1 or int(df) != df:
        raise DomainError(f"df must be a positive integer, got {df!r}")


def chi2_logpdf(x, df):
    """Log density of the chi-square distribution with integer ``df``."""
    _check_df(df)
    if x < 0:
        raise DomainError(f"chi-square density needs x >= 0, got {x!r}")
    h = 0.5 * df
    if x == 0.0:
        if df == 1:
            raise PoleError("chi-square(1) density has a pole at x = 0")
        return -math.log(2.0) if df == 2 else -math.inf
    return (h - 1.0) * math.log(x) - 0.5 * x - h * math.log(2.0) - math.lgamma(h)


def chi2_pdf(x, df):
    return math.exp(chi2_logpdf(x, df))


def chi2_cdf(x, df):
    """``F(x; df) = gamma(df/2, x/2) / Gamma(df/2)``."""
    _check_df(df)
    if x < 0:
        raise DomainError(f"chi-square cdf needs x >= 0, got {x!r}")
    if df == 1:
        return erf(math.sqrt(0.5 * x))
    if df == 2:
        return -math.expm1(-0.5 * x)
    return regularized_lower_gamma(0.5 * df, 0.5 * x)


def chi2_sf(x, df):
    """Survival function ``1 - F(x; df)``."""
    _check_df(df)
    if x < 0:
        raise DomainError(f"chi-square sf needs x >= 0, got {x!r}")
    if df == 1:
        return erfc(math.sqrt(0.5 * x))
    if df == 2:
        return math.exp(-0.5 * x)
    return regularized_upper_gamma(0.5 * df, 0.5 * x)


def chi2_logsf(x, df):
    _check_df(df)
    if x < 0:
        raise DomainError(f"chi-square sf needs x >= 0, got {x!r}")
    if df == 1:
        return log_erfc(math.sqrt(0.5 * x))
    if df == 2:
        return -0.5 * x
    return log_regularized_upper_gamma(0.5 * df, 0.5 * x)


def chi2_logcdf(x, df):
    _check_df(df)
    if x < 0:
        raise DomainError(f"chi-square cdf needs x >= 0, got {x!r}")
    if x == 0.0:
        return -math.inf
    if df == 1:
        z = math.sqrt(0.5 * x)
        if z < 1.0:
            return math.log(erf(z))
        return math.log1p(-erfc(z))
    if df == 2:
        h = 0.5 * x
        return math.log(-math.expm1(-h)) if h < 0.6931 else math.log1p(-math.exp(-h))
    return log_regularized_lower_gamma(0.5 * df, 0.5 * x)


# -- combinatorics ----------------------------------------------------------

_DIRECT_SUM_LIMIT = 4096


def log_binomial(n, k):
    """``log C(n, k)``; sums logs directly when the short side is small."""
    if k < 0 or k > n:
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
    k = min(k, n - k)
    if k == 0:
        return 0.0
    if k <= _DIRECT_SUM_LIMIT:
        return math.fsum(math.log((n - i) / (i + 1)) for i in range(k))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def log_rank_coefficient(N, r):
    """``log(N! / ((N - r)! (r - 1)!))``, the order-statistic density prefactor."""
    if not (1 <= r <= N):
        raise DomainError(f"rank must satisfy 1 <= r <= N, got N={N}, r={r}")
    return math.log(N) + log_binomial(N - 1, r - 1)
