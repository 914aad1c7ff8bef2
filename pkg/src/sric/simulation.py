"""Monte Carlo experiments on subset regression with a trigonometric design.

Replication ``i`` of an experiment with seed ``s`` draws its noise from a
Philox stream keyed by ``(s, i)``, so results do not depend on how
replications are scheduled across threads.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .criteria import AdaptiveCorrection, aic_values, sric_values
from .errors import DomainError
from .order_stats import DEFAULT_TOL, OrderStatProvider
from .regression import Dataset, path_arrays

log = logging.getLogger(__name__)

CASE_HALVING = {3: 3, 4: 5, 5: 10, 6: 20}
CRITERIA = ("aic", "sric", "adaptive")
DEFAULT_NS = 2000
_LOG_2PI = math.log(2.0 * math.pi)
_U53 = 2.0**-53


def case_coefficients(case_id, k):
    """True coefficients for the six experimental cases.

    1: all zero. 2: 0.8^(i-1) for i <= 10, zero from i = 11.
    3-6: C^(i-1) with C = exp(-log 2 / h), halving every h = 3, 5, 10, 20 steps.
    """
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    i = np.arange(k, dtype=float)
    if case_id == 1:
        return np.zeros(k)
    if case_id == 2:
        return np.where(i < 10, 0.8**i, 0.0)
    if case_id in CASE_HALVING:
        c = math.exp(-math.log(2.0) / CASE_HALVING[case_id])
        return c**i
    raise DomainError(f"unknown case {case_id!r}; expected 1..6")


@dataclass(frozen=True)
class TrueModelSpec:
    case_id: int
    k: int
    coefficients: np.ndarray = field(repr=False)
    noise_variance: float = 0.1

    @classmethod
    def for_case(cls, case_id, k, noise_variance=0.1):
        if noise_variance < 0:
            raise DomainError("noise variance must be nonnegative")
        return cls(case_id, k, case_coefficients(case_id, k), float(noise_variance))


def trig_design(N, k):
    """Columns sqrt(2) cos(2 pi j n / N), sqrt(2) sin(2 pi j n / N), j = 1, 2, ...

    Distinct frequencies below N/2 make the columns exactly orthonormal in
    sample moments.
    """
    n_freq = (k + 1) // 2
    if k >= N or 2 * n_freq >= N:
        raise DomainError(f"trigonometric design needs 2*ceil(k/2) < N, got N={N}, k={k}")
    n = np.arange(1, N + 1, dtype=float)
    X = np.empty((N, k))
    for j in range(1, n_freq + 1):
        arg = 2.0 * math.pi * j * n / N
        X[:, 2 * j - 2] = math.sqrt(2.0) * np.cos(arg)
        if 2 * j - 1 < k:
            X[:, 2 * j - 1] = math.sqrt(2.0) * np.sin(arg)
    return X


def noise(seed, replication, N, sd):
    """N(0, sd^2) draws by inverse CDF from the (seed, replication) Philox stream."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, replication], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    u = (gen.integers(0, 2**53, size=N, dtype=np.uint64).astype(float) + 0.5) * _U53
    return sd * ndtri(u)


def generate_dataset(truth, N, seed, replication=0, design=None):
    X = trig_design(N, truth.k) if design is None else design
    y = X @ truth.coefficients + noise(seed, replication, N, math.sqrt(truth.noise_variance))
    return Dataset(y, X)


@dataclass(frozen=True)
class ExperimentConfig:
    truth: TrueModelSpec
    N: int
    NS: int = DEFAULT_NS
    m_max: int | None = None
    seed: int = 0
    criteria: tuple = ()
    mode: str = "mixture"
    scale: float = 1.0
    tol: float = DEFAULT_TOL
    threads: int = 1

    def __post_init__(self):
        if self.NS < 1:
            raise DomainError("NS must be at least 1")
        if self.N < 2:
            raise DomainError("N must be at least 2")
        m_max = self.resolved_m_max
        if not (1 <= m_max <= self.truth.k):
            raise DomainError(f"m_max must be in 1..k={self.truth.k}, got {m_max}")
        unknown = set(self.criteria) - set(CRITERIA)
        if unknown:
            raise DomainError(f"unknown criteria {sorted(unknown)}; expected {CRITERIA}")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")

    @property
    def resolved_m_max(self):
        return min(self.truth.k, 30) if self.m_max is None else self.m_max

    def describe(self):
        """Result-determining parameters (threads excluded)."""
        return {
            "case": self.truth.case_id,
            "k": self.truth.k,
            "noise_variance": self.truth.noise_variance,
            "N": self.N,
            "NS": self.NS,
            "m_max": self.resolved_m_max,
            "seed": self.seed,
            "criteria": list(self.criteria),
            "mode": self.mode,
            "scale": self.scale,
            "tol": self.tol,
        }


def _fmt(v):
    return format(float(v), ".12g")


def _json_num(v):
    v = float(v)
    if not math.isfinite(v):
        return None
    return float(format(v, ".12g"))


@dataclass
class ExperimentReport:
    """Per-order Monte Carlo means with their standard errors.

    ``columns`` maps a column name to an array over orders 0..m_max;
    ``selections`` maps a criterion to counts of the selected order.
    """

    config: ExperimentConfig
    columns: dict
    stderr: dict
    selections: dict
    safeguard_count: int = 0
    wall_clock: float = 0.0

    @property
    def orders(self):
        return np.arange(self.config.resolved_m_max + 1)

    def column(self, name):
        return self.columns[name]

    def csv_text(self):
        names = list(self.columns)
        lines = [",".join(["m"] + names)]
        for m in self.orders:
            lines.append(",".join([str(m)] + [_fmt(self.columns[n][m]) for n in names]))
        return "\n".join(lines) + "\n"

    def as_dict(self):
        return {
            "config": self.config.describe(),
            "replications": self.config.NS,
            "seed": self.config.seed,
            "orders": [int(m) for m in self.orders],
            "means": {n: [_json_num(v) for v in c] for n, c in self.columns.items()},
            "stderr": {n: [_json_num(v) for v in c] for n, c in self.stderr.items()},
            "selected_order_counts": {n: [int(c) for c in v] for n, v in self.selections.items()},
            "safeguard_applied_count": int(self.safeguard_count),
        }

    def json_text(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=False) + "\n"


class _Replicator:
    def __init__(self, config, provider):
        c = config
        self.config = c
        self.m_max = c.resolved_m_max
        self.X = trig_design(c.N, c.truth.k)
        self.XT = np.ascontiguousarray(self.X.T)
        self.sxx = np.einsum("ij,ij->j", self.X, self.X)
        self.signal = self.X @ c.truth.coefficients
        self.a_star = np.asarray(c.truth.coefficients, dtype=float)
        self.sd = math.sqrt(c.truth.noise_variance)
        self.sric_table = None
        self.adaptive = None
        if "sric" in c.criteria:
            self.sric_table = provider.table(c.truth.k, self.m_max)
        if "adaptive" in c.criteria:
            self.adaptive = AdaptiveCorrection(c.truth.k, self.m_max, provider, c.mode, c.scale, c.tol)

    def run(self, rep):
        c = self.config
        N = c.N
        y = self.signal + noise(c.seed, rep, N, self.sd)
        a_hat = self.XT @ y / self.sxx
        ranking, sigma2, loglik = path_arrays(y, a_hat, self.sxx, self.m_max)
        top = ranking[: self.m_max]
        a_star = self.a_star
        # coefficient error: sum over selected of (a* - a_hat)^2 plus unselected a*^2
        gain = np.square(a_star[top] - a_hat[top]) - np.square(a_star[top])
        err = float(a_star @ a_star) + np.concatenate([[0.0], np.cumsum(gain)])
        ell = N * (-0.5 * (_LOG_2PI + np.log(sigma2)) - (c.truth.noise_variance + err) / (2.0 * sigma2))
        row = {"loglik": loglik, "expected_loglik": ell, "bias": loglik - ell}
        picks = {}
        aic = aic_values(loglik)
        if "aic" in c.criteria:
            row["corrected_aic"] = loglik - (np.arange(self.m_max + 1) + 1.0)
            picks["aic"] = int(np.argmin(aic))
        if self.sric_table is not None:
            v = sric_values(loglik, self.sric_table)
            row["corrected_sric"] = loglik - (self.sric_table.cumsum[: self.m_max + 1] + 1.0)
            picks["sric"] = int(np.argmin(v))
        safeguard = False
        if self.adaptive is not None:
            tr = self.adaptive.trace(loglik)
            row["corrected_adaptive"] = tr.corrected_loglik
            row["penalty_adaptive"] = tr.penalty
            m_ad = int(np.argmax(tr.corrected_loglik))
            m_aic = int(np.argmin(aic))
            picks["adaptive"] = min(m_ad, m_aic)
            safeguard = m_aic < m_ad
        return row, picks, safeguard


def _run(config, provider=None):
    t0 = time.perf_counter()
    provider = provider or OrderStatProvider(df=1, tol=config.tol, threads=config.threads)
    rep = _Replicator(config, provider)
    NS = config.NS
    m1 = rep.m_max + 1

    first_row, _, _ = rep.run(0)
    names = list(first_row)
    store = {n: np.empty((NS, m1)) for n in names}
    picks = {n: np.empty(NS, dtype=np.int64) for n in config.criteria}
    safeguards = np.zeros(NS, dtype=bool)

    def work(block):
        for i in block:
            try:
                row, pk, sg = rep.run(i)
            except Exception as exc:
                raise type(exc)(f"replication {i}: {exc}") from exc
            for n in names:
                store[n][i] = row[n]
            for n, v in pk.items():
                picks[n][i] = v
            safeguards[i] = sg

    threads = max(1, int(config.threads or 1))
    blocks = [range(s, min(NS, s + 256)) for s in range(0, NS, 256)]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, blocks))
    else:
        for b in blocks:
            work(b)

    columns = {}
    stderr = {}
    for n in names:
        data = store[n]
        columns["mean_" + n] = data.mean(axis=0)
        stderr["mean_" + n] = data.std(axis=0, ddof=1) / math.sqrt(NS) if NS > 1 else np.full(m1, np.nan)
        if n == "bias":
            inc = np.diff(data, axis=1)
            columns["mean_bias_increment"] = np.concatenate([[np.nan], inc.mean(axis=0)])
            stderr["mean_bias_increment"] = np.concatenate(
                [[np.nan], inc.std(axis=0, ddof=1) / math.sqrt(NS) if NS > 1 else np.full(m1 - 1, np.nan)]
            )
    selections = {n: np.bincount(v, minlength=m1) for n, v in picks.items()}
    wall = time.perf_counter() - t0
    log.info("experiment case=%s k=%s NS=%s finished in %.2fs", config.truth.case_id, config.truth.k, NS, wall)
    return ExperimentReport(config, columns, stderr, selections, int(safeguards.sum()), wall)


def run_bias_experiment(config, provider=None):
    """Means of loglik, expected loglik and their difference per order."""
    if config.criteria:
        config = ExperimentConfig(**{**_fields(config), "criteria": ()})
    return _run(config, provider)


def run_correction_experiment(config, provider=None):
    """Bias experiment plus corrected log-likelihoods and selected orders per criterion."""
    if not config.criteria:
        raise DomainError("correction experiment needs at least one criterion")
    return _run(config, provider)


def _fields(config):
    return {f: getattr(config, f) for f in ExperimentConfig.__dataclass_fields__}
