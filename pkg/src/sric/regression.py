"""Subset regression under an orthonormal design.

With columns satisfying mean(x_j) = 0, mean(x_j^2) = 1 and
mean(x_i x_j) = 0, each coefficient is estimated independently and the
RSS-optimal subset of size m is the m columns with the largest a_hat_j^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateColumnError, DomainError, OrthogonalityError

ORTHO_TOL = 1e-8
# residual variance is floored at this fraction of mean(y^2) so that exact fits stay finite
SIGMA2_FLOOR = 1e-12
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class OrthogonalityReport:
    max_abs_mean: float
    max_meansq_dev: float
    max_offdiag: float
    tol: float = ORTHO_TOL

    @property
    def orthonormal(self):
        return max(self.max_abs_mean, self.max_meansq_dev, self.max_offdiag) <= self.tol

    def as_dict(self):
        return {
            "max_abs_mean": self.max_abs_mean,
            "max_meansq_dev": self.max_meansq_dev,
            "max_offdiag": self.max_offdiag,
            "orthonormal": self.orthonormal,
        }


def check_orthogonality(data, tol=ORTHO_TOL):
    """Sample-moment diagnostics of the design; accepts a Dataset or a matrix."""
    X = np.asarray(getattr(data, "X", data), dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DomainError("design must be a 2-D array with at least two rows")
    N = X.shape[0]
    means = X.mean(axis=0)
    gram = X.T @ X / N
    diag = np.diag(gram)
    off = gram - np.diag(diag)
    return OrthogonalityReport(
        max_abs_mean=float(np.max(np.abs(means))) if X.shape[1] else 0.0,
        max_meansq_dev=float(np.max(np.abs(diag - 1.0))) if X.shape[1] else 0.0,
        max_offdiag=float(np.max(np.abs(off))) if X.shape[1] > 1 else 0.0,
        tol=tol,
    )


def orthogonalize(X):
    """Center and orthonormalize columns by modified Gram-Schmidt.

    Returns ``(Q, means, R)`` with ``X - means = Q @ R`` and ``Q`` orthonormal
    in the sample-moment sense (``Q.T @ Q / N = I``).
    """
    X = np.asarray(X, dtype=float)
    N, k = X.shape
    means = X.mean(axis=0)
    Q = X - means
    R = np.zeros((k, k))
    scale = math.sqrt(N)
    for j in range(k):
        v = Q[:, j].copy()
        for i in range(j):
            R[i, j] = Q[:, i] @ v / N
            v -= R[i, j] * Q[:, i]
        norm = np.linalg.norm(v)
        if norm <= 1e-12 * max(1.0, np.linalg.norm(X[:, j])):
            raise DegenerateColumnError(f"column {j + 1} is constant or collinear with earlier columns")
        R[j, j] = norm / scale
        Q[:, j] = v / R[j, j]
    return Q, means, R


@dataclass(frozen=True)
class Dataset:
    """Response ``y`` (length N) with an N x k design ``X``.

    ``orthonormal`` is set by ``check_orthogonality`` at construction.
    ``transform`` is ``(means, R)`` when the design was orthogonalized.
    """

    y: np.ndarray
    X: np.ndarray
    orthonormal: bool = field(init=False)
    report: OrthogonalityReport = field(init=False, repr=False)
    transform: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if y.ndim != 1 or X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DomainError(f"shape mismatch: y {y.shape}, X {X.shape}")
        y.flags.writeable = False
        X.flags.writeable = False
        report = check_orthogonality(X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "report", report)
        object.__setattr__(self, "orthonormal", report.orthonormal)

    @property
    def N(self):
        return self.X.shape[0]

    @property
    def k(self):
        return self.X.shape[1]

    @classmethod
    def orthogonalized(cls, y, X):
        Q, means, R = orthogonalize(X)
        return cls(y, Q, transform=(means, R))


@dataclass(frozen=True)
class SubsetFit:
    order: int
    indices: tuple
    coefficients: np.ndarray
    sigma2_hat: float
    loglik: float


@dataclass(frozen=True)
class SubsetPath:
    """Nested fits for m = 0..m_max; ``ranking`` orders all k columns."""

    fits: tuple
    ranking: np.ndarray
    coefficients: np.ndarray
    N: int

    @property
    def m_max(self):
        return len(self.fits) - 1

    @property
    def loglik(self):
        return np.array([f.loglik for f in self.fits])

    @property
    def sigma2(self):
        return np.array([f.sigma2_hat for f in self.fits])

    @property
    def k(self):
        return len(self.coefficients)


def _require_orthonormal(dataset, allow_nonorthonormal):
    if not dataset.orthonormal and not allow_nonorthonormal:
        r = dataset.report
        raise OrthogonalityError(
            "design is not orthonormal "
            f"(max |mean| {r.max_abs_mean:.3g}, max |meansq-1| {r.max_meansq_dev:.3g}, "
            f"max |offdiag| {r.max_offdiag:.3g}); orthogonalize it first"
        )


def fit_coefficients(dataset, allow_nonorthonormal=False):
    """Per-column ML estimates ``a_hat_j = sum(y x_j) / sum(x_j^2)``."""
    _require_orthonormal(dataset, allow_nonorthonormal)
    sxx = np.einsum("ij,ij->j", dataset.X, dataset.X)
    bad = np.flatnonzero(sxx == 0.0)
    if bad.size:
        raise DegenerateColumnError(f"column {bad[0] + 1} has zero sum of squares")
    return dataset.X.T @ dataset.y / sxx


def rank_columns(a_hat):
    """Columns by descending a_hat^2; ties go to the smaller index."""
    return np.argsort(-np.square(a_hat), kind="stable")


def path_arrays(y, a_hat, sxx, m_max):
    """Ranking, residual variances and log-likelihoods for orders 0..m_max."""
    N = y.shape[0]
    ranking = rank_columns(a_hat)
    top = ranking[:m_max]
    yy = float(y @ y)
    if yy == 0.0:
        raise DomainError("response is identically zero")
    explained = np.concatenate([[0.0], np.cumsum(np.square(a_hat[top]) * sxx[top])])
    sigma2 = np.maximum((yy - explained) / N, SIGMA2_FLOOR * yy / N)
    loglik = -0.5 * N * (_LOG_2PI + np.log(sigma2)) - 0.5 * N
    return ranking, sigma2, loglik


def greedy_subset_path(dataset, m_max=None, allow_nonorthonormal=False):
    """Nested best-subset path; fits[m] uses the top-m ranked columns."""
    m_max = dataset.k if m_max is None else m_max
    if not (1 <= m_max <= dataset.k):
        raise DomainError(f"need 1 <= m_max <= k={dataset.k}, got {m_max}")
    a_hat = fit_coefficients(dataset, allow_nonorthonormal)
    sxx = np.einsum("ij,ij->j", dataset.X, dataset.X)
    ranking, sigma2, loglik = path_arrays(dataset.y, a_hat, sxx, m_max)
    fits = tuple(
        SubsetFit(
            order=m,
            indices=tuple(int(i) for i in ranking[:m]),
            coefficients=a_hat[ranking[:m]].copy(),
            sigma2_hat=float(sigma2[m]),
            loglik=float(loglik[m]),
        )
        for m in range(m_max + 1)
    )
    return SubsetPath(fits=fits, ranking=ranking, coefficients=a_hat, N=dataset.N)


def aic(fit, N=None):
    """``-2 loglik + 2 (m + 1)``; the +1 counts the error variance."""
    return -2.0 * fit.loglik + 2.0 * (fit.order + 1)


def _coefficient_error(fit, truth):
    a_star = np.asarray(truth.coefficients, dtype=float)
    idx = np.asarray(fit.indices, dtype=int)
    inside = np.sum(np.square(a_star[idx] - fit.coefficients)) if idx.size else 0.0
    outside = np.sum(np.square(a_star)) - (np.sum(np.square(a_star[idx])) if idx.size else 0.0)
    return float(inside + outside)


def expected_loglik(fit, truth, N):
    """Expected log-likelihood of a fitted subset model under the true model, times N."""
    s2 = fit.sigma2_hat
    if not s2 > 0:
        raise DomainError("expected log-likelihood undefined for zero residual variance")
    err = _coefficient_error(fit, truth)
    return N * (-0.5 * (_LOG_2PI + math.log(s2)) - (truth.noise_variance + err) / (2.0 * s2))


def kl_entropy(fit, truth):
    """Per-observation entropy of the true model relative to the fit (always <= 0)."""
    s2 = fit.sigma2_hat
    if not s2 > 0:
        raise DomainError("entropy undefined for zero residual variance")
    err = _coefficient_error(fit, truth)
    v = truth.noise_variance
    return 0.5 * (math.log(v / s2) + 1.0 - (v + err) / s2)
