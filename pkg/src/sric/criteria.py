"""Order-selection criteria: AIC, SRIC and the adaptive bias correction.

All penalties here are on the log-likelihood scale: AIC charges m + 1, SRIC
charges the cumulative expected extremes of chi-square(1) order statistics
plus one, and the adaptive correction mixes the two according to where the
log-likelihood increments stop looking like signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TableTooShortError
from .order_stats import DEFAULT_TOL, OrderStatProvider

MODES = ("mixture", "literal")


@dataclass(frozen=True)
class CriterionResult:
    """Criterion values for orders 0..m_max (smaller is better)."""

    name: str
    values: np.ndarray
    selected_order: int
    safeguard_applied: bool = False


def _argmin_first(values):
    return int(np.argmin(values))


def _loglik_of(path):
    return np.asarray(path.loglik if hasattr(path, "loglik") else path, dtype=float)


def aic_values(loglik):
    loglik = np.asarray(loglik, dtype=float)
    return -2.0 * loglik + 2.0 * (np.arange(loglik.size) + 1.0)


def aic_criterion(path):
    v = aic_values(_loglik_of(path))
    return CriterionResult("aic", v, _argmin_first(v))


def sric_values(loglik, table):
    loglik = np.asarray(loglik, dtype=float)
    m_max = loglik.size - 1
    if table.r_max < m_max:
        raise TableTooShortError(f"table reaches r={table.r_max}, path needs {m_max}")
    return -2.0 * loglik + 2.0 * (table.cumsum[: m_max + 1] + 1.0)


def sric(path, k, table):
    """SRIC(m) = -2 loglik_m + 2 (sum_{r<=m} E[X_(r|k)] + 1)."""
    if table.N != k:
        raise DomainError(f"SRIC table must be built with N = k = {k}, got N={table.N}")
    v = sric_values(_loglik_of(path), table)
    return CriterionResult("sric", v, _argmin_first(v))


def loglik_increments(path):
    """DF_m = loglik_m - loglik_{m-1} for m = 1..m_max."""
    return np.diff(_loglik_of(path))


def _logistic_noise(df_m, e_max):
    z = df_m - e_max
    if z >= 0:
        t = math.exp(-z)
        return t / (1.0 + t)
    return 1.0 / (1.0 + math.exp(z))


def noise_weight(df_m, k, m, tol=DEFAULT_TOL, *, scale=1.0, provider=None):
    """Weight the m-th increment gives to noise.

    ``1 / (1 + exp(DF_m - scale * E[X_(1|k-m)]))``, the overflow-safe form of
    the ratio of exponentials.
    """
    if not (1 <= m < k):
        raise DomainError(f"noise weight needs 1 <= m < k, got k={k}, m={m}")
    provider = provider or _default_provider(tol)
    return _logistic_noise(float(df_m), scale * provider.max_expectation(k - m))


def onset_weights(alphas):
    """Cumulative onset weights ``w_m = min(sum_{j<=m} alpha_j, 1)`` and increments."""
    alphas = np.asarray(alphas, dtype=float)
    w = np.minimum(np.cumsum(alphas), 1.0)
    delta = np.diff(np.concatenate([[0.0], w]))
    return w, np.maximum(delta, 0.0)


_providers = {}


def _default_provider(tol):
    p = _providers.get(tol)
    if p is None:
        p = _providers[tol] = OrderStatProvider(df=1, tol=tol)
    return p


def mixture_onset_penalties(k, m_max, provider):
    """Matrix ``P[t-1, m]`` of the penalty at order m given noise onset at t.

    Unit cost per coefficient before the onset, then the cumulative
    extreme-value cost of the ``k - t + 1`` variables that remain.
    """
    provider.prefetch({k - t + 1: m_max - t + 1 for t in range(1, m_max + 1)})
    m = np.arange(m_max + 1, dtype=float)
    P = np.tile(m, (m_max, 1))
    for t in range(1, m_max + 1):
        cum = provider.table(k - t + 1, m_max - t + 1).cumsum
        P[t - 1, t:] = (t - 1) + cum[1 : m_max - t + 2]
    return P


def literal_penalty_terms(k, m_max, provider):
    """Matrix ``B[j-1, m]`` for j = 1..k, m = 0..m_max as printed.

    ``B = j`` for j < m, ``m - 1 + E[X_(j-m|k-m)]`` for j > m, and ``m`` at
    the j = m boundary where the expectation would have rank zero.
    """
    orders = [m for m in range(1, m_max + 1) if m < k]
    provider.prefetch({k - m: k - m for m in orders})
    B = np.zeros((k, m_max + 1))
    j = np.arange(1, k + 1, dtype=float)
    for m in range(1, m_max + 1):
        col = np.empty(k)
        col[: m - 1] = j[: m - 1]
        col[m - 1] = m
        if m < k:
            col[m:] = (m - 1) + provider.table(k - m).expectations
        B[:, m] = col
    return B


def adaptive_penalty(delta, residual_w, k, m, tables, mode="mixture"):
    """Penalty C_m for a single order.

    ``delta`` is the onset distribution over t = 1..len(delta) and
    ``residual_w`` the mass not yet assigned (onset beyond the path). In
    literal mode the cumulative weights ``cumsum(delta)`` are used, held at
    their last value beyond the path.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if m < 1:
        raise DomainError("adaptive penalty is defined for m >= 1")
    delta = np.asarray(delta, dtype=float)
    if mode == "mixture":
        total = 0.0
        for t, d in enumerate(delta, start=1):
            if d == 0.0:
                continue
            if m < t:
                pen = m
            else:
                pen = (t - 1) + tables.table(k - t + 1, m - t + 1).cumulative(m - t + 1)
            total += d * pen
        return total + residual_w * m
    w = np.cumsum(delta)
    w_ext = np.concatenate([w, np.full(max(0, k - w.size), w[-1] if w.size else 0.0)])[:k]
    total = 0.0
    for j in range(1, k + 1):
        if j < m:
            b = j
        elif j == m:
            b = m
        else:
            b = (m - 1) + tables.expectation(k - m, j - m)
        total += w_ext[j - 1] * b
    return total


@dataclass(frozen=True)
class AdaptiveBiasTrace:
    """Per-order quantities of the adaptive correction, index = order m.

    Entry 0 of ``increments``, ``alpha``, ``w`` and ``delta`` is a zero
    placeholder for the null model; ``penalty[0] = 0``.
    """

    increments: np.ndarray
    alpha: np.ndarray
    w: np.ndarray
    delta: np.ndarray
    penalty: np.ndarray
    corrected_loglik: np.ndarray
    mode: str

    @property
    def aic_scale(self):
        return -2.0 * self.corrected_loglik + 2.0


class AdaptiveCorrection:
    """Precomputed adaptive penalty for a fixed (k, m_max).

    Only the onset distribution depends on the data, so the per-onset penalty
    matrix is built once and each trace is a matrix-vector product.
    """

    def __init__(self, k, m_max, provider=None, mode="mixture", scale=1.0, tol=DEFAULT_TOL):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        if not (1 <= m_max <= k):
            raise DomainError(f"need 1 <= m_max <= k, got m_max={m_max}, k={k}")
        self.k = k
        self.m_max = m_max
        self.mode = mode
        self.scale = scale
        self.provider = provider or _default_provider(tol)
        n_alpha = min(m_max, k - 1)
        self.provider.prefetch({k - m: 1 for m in range(1, n_alpha + 1)})
        self.extremes = np.array([self.provider.max_expectation(k - m) for m in range(1, n_alpha + 1)])
        if mode == "mixture":
            self.matrix = mixture_onset_penalties(k, m_max, self.provider)
        else:
            self.matrix = literal_penalty_terms(k, m_max, self.provider)

    def alphas(self, increments):
        inc = np.asarray(increments, dtype=float)
        out = np.ones(self.m_max)
        # the last variable (m = k) has no competitors left; it is treated as pure noise
        n = self.extremes.size
        z = inc[:n] - self.scale * self.extremes
        out[:n] = np.where(z >= 0, np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))), 1.0 / (1.0 + np.exp(-np.abs(z))))
        return out

    def penalties(self, w, delta):
        orders = np.arange(self.m_max + 1, dtype=float)
        if self.mode == "mixture":
            residual = 1.0 - w[-1]
            return delta @ self.matrix + residual * orders
        w_ext = np.concatenate([w, np.full(self.k - w.size, w[-1])])
        C = w_ext @ self.matrix
        C[0] = 0.0
        return C

    def trace(self, path):
        loglik = _loglik_of(path)
        if loglik.size != self.m_max + 1:
            raise DomainError(f"path has {loglik.size - 1} orders, correction built for {self.m_max}")
        inc = np.diff(loglik)
        alpha = self.alphas(inc)
        w, delta = onset_weights(alpha)
        C = self.penalties(w, delta)
        pad = np.zeros(1)
        return AdaptiveBiasTrace(
            increments=np.concatenate([pad, inc]),
            alpha=np.concatenate([pad, alpha]),
            w=np.concatenate([pad, w]),
            delta=np.concatenate([pad, delta]),
            penalty=C,
            corrected_loglik=loglik - C,
            mode=self.mode,
        )


def adaptive_trace(path, k, provider=None, mode="mixture", scale=1.0, tol=DEFAULT_TOL):
    m_max = _loglik_of(path).size - 1
    return AdaptiveCorrection(k, m_max, provider, mode, scale, tol).trace(path)


def select_order(path, trace, N=None):
    """Adaptive order with the AIC safeguard: the lower of the two selections."""
    loglik = _loglik_of(path)
    if trace.corrected_loglik.size != loglik.size:
        raise DomainError("trace and path cover different orders")
    m_adaptive = int(np.argmax(trace.corrected_loglik))
    m_aic = _argmin_first(aic_values(loglik))
    return CriterionResult(
        "adaptive",
        trace.aic_scale,
        min(m_adaptive, m_aic),
        safeguard_applied=m_aic < m_adaptive,
    )
