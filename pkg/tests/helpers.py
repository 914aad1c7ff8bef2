"""Shared test helpers: random orthonormal datasets and the exhaustive subset oracle."""

import itertools
import math
from pathlib import Path

import numpy as np

from sric.regression import Dataset

DATA = Path(__file__).parent / "data"


def random_orthonormal(rng, N, k):
    A = np.column_stack([np.ones(N), rng.standard_normal((N, k))])
    Q, _ = np.linalg.qr(A)
    return Q[:, 1:] * math.sqrt(N)


def random_dataset(rng, N, k):
    X = random_orthonormal(rng, N, k)
    a = rng.standard_normal(k) * rng.choice([0.0, 0.05, 0.3], size=k)
    y = X @ a + rng.standard_normal(N) * 0.3
    return Dataset(y, X)


def exhaustive_rss(dataset, m):
    """Minimum RSS over all size-m subsets by least squares (no orthogonality assumed)."""
    y, X = dataset.y, dataset.X
    best, best_set = np.inf, None
    for cols in itertools.combinations(range(dataset.k), m):
        if m == 0:
            rss = float(y @ y)
        else:
            A = X[:, cols]
            coef, *_ = np.linalg.lstsq(A, y, rcond=None)
            r = y - A @ coef
            rss = float(r @ r)
        if rss < best:
            best, best_set = rss, set(cols)
    return best, best_set
