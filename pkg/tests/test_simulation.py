import json
import math

import numpy as np
import pytest
from scipy import stats

from sric.errors import DomainError
from sric.order_stats import OrderStatProvider
from sric.regression import check_orthogonality, fit_coefficients
from sric.simulation import (
    ExperimentConfig,
    TrueModelSpec,
    _Replicator,
    case_coefficients,
    generate_dataset,
    noise,
    run_bias_experiment,
    run_correction_experiment,
    trig_design,
)


def test_case_coefficients():
    assert np.all(case_coefficients(1, 30) == 0)
    a = case_coefficients(3, 40)
    assert a[3:] / a[:-3] == pytest.approx(np.full(37, 0.5), rel=1e-13)
    b = case_coefficients(2, 30)
    assert b[:10] == pytest.approx(0.8 ** np.arange(10))
    assert np.all(b[10:] == 0)
    for case, h in ((4, 5), (5, 10), (6, 20)):
        c = case_coefficients(case, 60)
        assert c[h] == pytest.approx(0.5, rel=1e-13)
    with pytest.raises(DomainError):
        case_coefficients(7, 10)
    with pytest.raises(DomainError):
        case_coefficients(1, 0)


def test_trig_design_examples():
    X = trig_design(8, 2)
    n = np.arange(1, 9)
    assert X[:, 0] == pytest.approx(math.sqrt(2) * np.cos(2 * math.pi * n / 8))
    assert X[:, 1] == pytest.approx(math.sqrt(2) * np.sin(2 * math.pi * n / 8))
    assert np.max(np.abs(X.T @ X / 8 - np.eye(2))) <= 1e-12
    for N, k in ((1000, 30), (1000, 100), (50, 7), (11, 10)):
        assert check_orthogonality(trig_design(N, k)).orthonormal


def test_trig_design_aliasing():
    with pytest.raises(DomainError):
        trig_design(10, 10)
    with pytest.raises(DomainError):
        trig_design(10, 9)  # the fifth cosine would sit at the Nyquist frequency


def test_generate_dataset_properties():
    truth = TrueModelSpec.for_case(1, 30)
    N = 1000
    ds = generate_dataset(truth, N, seed=42)
    assert abs(ds.y.var() - 0.1) <= 3 * math.sqrt(2 / N) * 0.1
    again = generate_dataset(truth, N, seed=42)
    assert np.array_equal(ds.y, again.y)
    other = generate_dataset(truth, N, seed=42, replication=1)
    assert not np.array_equal(ds.y, other.y)
    noiseless = TrueModelSpec.for_case(5, 30, noise_variance=0.0)
    assert fit_coefficients(generate_dataset(noiseless, N, 1)) == pytest.approx(noiseless.coefficients, abs=1e-10)


def test_noise_is_gaussian_and_unbiased():
    draws = np.concatenate([noise(3, rep, 1000, math.sqrt(0.1)) for rep in range(200)])
    assert stats.normaltest(draws).pvalue > 0.01
    var = draws.var(ddof=1)
    assert abs(var - 0.1) < 3 * 0.1 * math.sqrt(2 / draws.size)


def test_config_validation():
    truth = TrueModelSpec.for_case(1, 30)
    with pytest.raises(DomainError):
        ExperimentConfig(truth, 1000, NS=0)
    with pytest.raises(DomainError):
        ExperimentConfig(truth, 1000, m_max=31)
    with pytest.raises(DomainError):
        ExperimentConfig(truth, 1000, criteria=("bic",))
    with pytest.raises(DomainError):
        ExperimentConfig(truth, 1000, seed=-1)
    with pytest.raises(DomainError):
        TrueModelSpec.for_case(1, 5, noise_variance=-1)
    assert ExperimentConfig(TrueModelSpec.for_case(1, 100), 1000).resolved_m_max == 30


def test_report_columns_and_bias_identity():
    cfg = ExperimentConfig(TrueModelSpec.for_case(2, 30), 1000, NS=300, seed=1)
    rep = run_bias_experiment(cfg)
    c = rep.columns
    assert c["mean_bias"] == pytest.approx(c["mean_loglik"] - c["mean_expected_loglik"], abs=1e-9)
    assert np.isnan(c["mean_bias_increment"][0])
    assert c["mean_bias_increment"][1:] == pytest.approx(np.diff(c["mean_bias"]), abs=1e-9)
    header = rep.csv_text().splitlines()[0].split(",")
    assert header[:4] == ["m", "mean_loglik", "mean_expected_loglik", "mean_bias"]
    doc = json.loads(rep.json_text())
    assert doc["replications"] == 300 and doc["seed"] == 1
    assert doc["stderr"]["mean_bias_increment"][0] is None
    assert "wall_clock" not in doc


def test_single_replication_report():
    truth = TrueModelSpec.for_case(1, 30)
    cfg = ExperimentConfig(truth, 1000, NS=1, seed=7)
    rep = run_bias_experiment(cfg)
    row, _, _ = _Replicator(cfg, OrderStatProvider()).run(0)
    assert np.array_equal(rep.columns["mean_loglik"], row["loglik"])
    assert np.array_equal(rep.columns["mean_bias"], row["bias"])
    assert np.all(np.isnan(rep.stderr["mean_loglik"]))


def test_thread_count_does_not_change_report():
    truth = TrueModelSpec.for_case(3, 30)
    base = dict(truth=truth, N=1000, NS=700, seed=11, criteria=("aic", "sric", "adaptive"))
    one = run_correction_experiment(ExperimentConfig(**base, threads=1))
    four = run_correction_experiment(ExperimentConfig(**base, threads=4))
    assert one.csv_text() == four.csv_text()
    assert one.json_text() == four.json_text()


def test_expected_loglik_ceiling():
    truth = TrueModelSpec.for_case(4, 30)
    N = 1000
    rep = run_bias_experiment(ExperimentConfig(truth, N, NS=300, seed=5))
    ceiling = N * (-0.5 * math.log(2 * math.pi * truth.noise_variance) - 0.5)
    assert np.all(rep.columns["mean_expected_loglik"] <= ceiling + 1e-9)


@pytest.mark.parametrize("k", [10, 30])
def test_bias_matches_order_statistics(k, provider):
    cfg = ExperimentConfig(TrueModelSpec.for_case(1, k), 1000, NS=2000, m_max=5, seed=21)
    rp = _Replicator(cfg, provider)
    gains = np.array([(lambda b: b[1:] - b[0])(rp.run(i)[0]["bias"]) for i in range(cfg.NS)])
    mean = gains.mean(axis=0)
    se = gains.std(axis=0, ddof=1) / math.sqrt(cfg.NS)
    theory = provider.table(k, 5).cumsum[1:6]
    assert np.all(np.abs(mean - theory) < 3 * se)


def test_correction_requires_criteria():
    cfg = ExperimentConfig(TrueModelSpec.for_case(1, 30), 1000, NS=5)
    with pytest.raises(DomainError):
        run_correction_experiment(cfg)


def test_correction_examples():
    crit = ("aic", "sric", "adaptive")
    r1 = run_correction_experiment(ExperimentConfig(TrueModelSpec.for_case(1, 30), 1000, NS=400, seed=3, criteria=crit))
    assert int(np.argmax(r1.selections["adaptive"])) == 0
    assert int(np.argmax(r1.columns["mean_corrected_sric"])) <= 1
    r2 = run_correction_experiment(ExperimentConfig(TrueModelSpec.for_case(2, 30), 1000, NS=400, seed=3, criteria=crit))
    assert int(np.argmax(r2.selections["adaptive"])) in (10, 11)
    r3 = run_correction_experiment(ExperimentConfig(TrueModelSpec.for_case(3, 30), 1000, NS=400, seed=3, criteria=crit))
    assert int(np.argmax(r3.columns["mean_corrected_adaptive"])) >= 25
    assert abs(int(np.argmax(r3.columns["mean_expected_loglik"])) - 21) <= 3
