"""Order statistics of chi-square variates.

Ranks are descending throughout: rank 1 is the maximum of the sample,
rank N the minimum.
"""

from __future__ import annotations

import math
import os
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import DomainError, QuadratureError, TableTooShortError
from .special_functions import log_rank_coefficient

DEFAULT_TOL = 1e-6
MAX_PANELS = 4000
_SIG_DIGITS = 12


@dataclass(frozen=True)
class OrderStatSpec:
    """The ``r``-th largest of ``N`` i.i.d. chi-square(``df``) variates."""

    N: int
    r: int
    df: int = 1

    def __post_init__(self):
        if self.N < 1:
            raise DomainError(f"N must be positive, got {self.N}")
        if not (1 <= self.r <= self.N):
            raise DomainError(f"rank must satisfy 1 <= r <= N, got N={self.N}, r={self.r}")
        if self.df < 1:
            raise DomainError(f"df must be a positive integer, got {self.df}")


def _df_constants(df):
    h = 0.5 * df
    return -h * math.log(2.0) - math.lgamma(h), math.lgamma(h), math.lgamma(h + 1.0)


def canonical(value):
    """Round to the 12 significant digits used by the cache file."""
    return float(format(value, f".{_SIG_DIGITS}g"))


def order_stat_log_pdf(x, spec):
    """Log density of ``X_(r|N)`` at ``x > 0``, assembled in log space."""
    if not x > 0:
        raise DomainError(f"order-statistic density needs x > 0, got {x!r}")
    lognorm, lg_s, lg_s1 = _df_constants(spec.df)
    return kernels.log_density(
        float(x), spec.N, spec.r, spec.df, log_rank_coefficient(spec.N, spec.r), lognorm, lg_s, lg_s1
    )


def expected_order_stat(spec, tol=DEFAULT_TOL, *, x_max=None, max_panels=MAX_PANELS):
    """``E[X_(r|N)]`` by adaptive Gauss-Legendre quadrature.

    Parameters
    ----------
    spec : OrderStatSpec
    tol : float
        Target absolute error of the integral.
    x_max : float, optional
        Truncate the integral at this x instead of the automatic tail limit
        (where ``N * (1 - F) = 1e-14``). Only useful for diagnosing tables
        computed over a fixed range.

    Raises
    ------
    QuadratureError
        If ``tol`` is not reached within ``max_panels`` panels; the exception
        carries the last estimate.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    if spec.N == 1 and not x_max:
        return float(spec.df)
    lognorm, lg_s, lg_s1 = _df_constants(spec.df)
    value, err, _, converged = kernels.expected_order_stat(
        spec.N,
        spec.r,
        spec.df,
        log_rank_coefficient(spec.N, spec.r),
        lognorm,
        lg_s,
        lg_s1,
        float(tol),
        int(max_panels),
        float(x_max) if x_max else 0.0,
    )
    if not converged:
        raise QuadratureError(
            f"quadrature for E[X_({spec.r}|{spec.N})], df={spec.df} did not reach tol={tol:g}"
            f" (error estimate {err:.3g})",
            estimate=value,
            error=err,
            rank=spec.r,
        )
    return value


@dataclass(frozen=True)
class OrderStatTable:
    """Expectations ``E[X_(r|N)]`` for ``r = 1..r_max`` and their prefix sums.

    ``expectations[r - 1]`` is rank ``r``; ``cumulative(m)`` is the sum of the
    first ``m`` expectations with ``cumulative(0) == 0``.
    """

    df: int
    N: int
    expectations: np.ndarray
    tol: float = DEFAULT_TOL
    cumsum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        e = np.asarray(self.expectations, dtype=float).copy()
        e.flags.writeable = False
        c = np.concatenate([[0.0], np.cumsum(e)])
        c.flags.writeable = False
        object.__setattr__(self, "expectations", e)
        object.__setattr__(self, "cumsum", c)

    @classmethod
    def from_expectations(cls, expectations, N=None, df=1):
        expectations = np.asarray(expectations, dtype=float)
        return cls(df=df, N=len(expectations) if N is None else N, expectations=expectations, tol=0.0)

    @property
    def r_max(self):
        return len(self.expectations)

    def expectation(self, r):
        if not (1 <= r <= self.r_max):
            raise TableTooShortError(f"rank {r} outside table of length {self.r_max} (N={self.N})")
        return float(self.expectations[r - 1])

    def cumulative(self, m):
        if not (0 <= m <= self.r_max):
            raise TableTooShortError(f"order {m} outside table of length {self.r_max} (N={self.N})")
        return float(self.cumsum[m])


class OrderStatCache:
    """Line-oriented cache of expectations: ``df,N,r,tol,value`` per line.

    Values and tolerances are stored with 12 significant digits. Updates are
    serialized by a lock and the file is rewritten atomically on ``save``.
    """

    def __init__(self, path=None):
        self.path = os.fspath(path) if path is not None else None
        self._data = {}
        self._dirty = False
        self._lock = threading.Lock()
        if self.path and os.path.exists(self.path):
            self._load()

    @staticmethod
    def _tol_key(tol):
        return format(tol, f".{_SIG_DIGITS}g")

    def _load(self):
        with open(self.path, encoding="ascii") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(",")
                if len(parts) != 5:
                    raise ValueError(f"{self.path}:{lineno}: expected 5 fields, got {len(parts)}")
                df, N, r = int(parts[0]), int(parts[1]), int(parts[2])
                self._data[(df, N, r, self._tol_key(float(parts[3])))] = float(parts[4])

    def __len__(self):
        return len(self._data)

    def get(self, df, N, r, tol):
        return self._data.get((df, N, r, self._tol_key(tol)))

    def put(self, df, N, r, tol, value):
        with self._lock:
            key = (df, N, r, self._tol_key(tol))
            if key not in self._data:
                self._data[key] = canonical(value)
                self._dirty = True

    def save(self):
        if not self.path:
            return
        with self._lock:
            if not self._dirty and os.path.exists(self.path):
                return
            lines = [
                f"{df},{N},{r},{tol},{format(v, f'.{_SIG_DIGITS}g')}\n"
                for (df, N, r, tol), v in sorted(self._data.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2], float(kv[0][3])))
            ]
            directory = os.path.dirname(os.path.abspath(self.path))
            os.makedirs(directory, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sric-cache-")
            with os.fdopen(fd, "w", encoding="ascii") as fh:
                fh.writelines(lines)
            os.replace(tmp, self.path)
            self._dirty = False


def _compute_ranks(N, ranks, df, tol, threads, cache):
    missing = []
    values = {}
    for r in ranks:
        hit = cache.get(df, N, r, tol) if cache is not None else None
        if hit is None:
            missing.append(r)
        else:
            values[r] = hit

    def one(r):
        try:
            return r, canonical(expected_order_stat(OrderStatSpec(N, r, df), tol))
        except QuadratureError as exc:
            exc.rank = r
            raise

    if threads and threads > 1 and len(missing) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, missing))
    else:
        results = [one(r) for r in missing]
    for r, v in results:
        values[r] = v
        if cache is not None:
            cache.put(df, N, r, tol, v)
    return [values[r] for r in ranks]


def expected_order_stat_table(N, r_max=None, df=1, tol=DEFAULT_TOL, *, cache=None, threads=1):
    """Table of ``E[X_(1|N)] .. E[X_(r_max|N)]`` with cumulative sums.

    Entries are rounded to 12 significant digits so that freshly computed
    and cache-loaded tables are identical.
    """
    if r_max is None:
        r_max = N
    if not (1 <= r_max <= N):
        raise DomainError(f"need 1 <= r_max <= N, got r_max={r_max}, N={N}")
    values = _compute_ranks(N, list(range(1, r_max + 1)), df, tol, threads, cache)
    return OrderStatTable(df=df, N=N, expectations=np.array(values), tol=tol)


@lru_cache(maxsize=None)
def _max_expectation(n, tol):
    return canonical(expected_order_stat(OrderStatSpec(n, 1, 1), tol))


def remaining_extreme_expectation(k, m, tol=DEFAULT_TOL):
    """``E[X_(1|k-m)]`` for chi-square(1): the largest of the remaining variables."""
    if not (0 <= m < k):
        raise DomainError(f"need 0 <= m < k, got k={k}, m={m}")
    return _max_expectation(k - m, tol)


class OrderStatProvider:
    """Memoized source of chi-square order-statistic tables.

    Tables are keyed by (N, df, tol) and extended on demand; a longer table
    supersedes a shorter one. Safe to share between threads.
    """

    def __init__(self, df=1, tol=DEFAULT_TOL, cache=None, threads=1):
        self.df = df
        self.tol = tol
        self.cache = cache
        self.threads = threads
        self._tables = {}
        self._lock = threading.RLock()

    def table(self, N, r_max=None):
        r_max = N if r_max is None else r_max
        with self._lock:
            have = self._tables.get(N)
            if have is not None and have.r_max >= r_max:
                return have
            tab = expected_order_stat_table(N, r_max, self.df, self.tol, cache=self.cache, threads=self.threads)
            self._tables[N] = tab
            return tab

    def expectation(self, N, r):
        return self.table(N, r).expectation(r)

    def max_expectation(self, N):
        return self.expectation(N, 1)

    def prefetch(self, requests):
        """Build several tables at once; ``requests`` maps N -> r_max."""
        todo = []
        with self._lock:
            for N, r_max in sorted(requests.items()):
                have = self._tables.get(N)
                if have is None or have.r_max < r_max:
                    todo.append((N, r_max))
        if not todo:
            return

        def build(item):
            N, r_max = item
            return N, expected_order_stat_table(N, r_max, self.df, self.tol, cache=self.cache, threads=1)

        if self.threads and self.threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                built = list(pool.map(build, todo))
        else:
            built = [build(item) for item in todo]
        with self._lock:
            for N, tab in built:
                have = self._tables.get(N)
                if have is None or have.r_max < tab.r_max:
                    self._tables[N] = tab

