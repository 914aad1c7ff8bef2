import json
from pathlib import Path

import numpy as np
import pytest

from sric.cli import main, read_dataset_csv, write_dataset_csv
from sric.regression import Dataset, greedy_subset_path
from sric.simulation import TrueModelSpec, generate_dataset

DATA = Path(__file__).parent / "data"


def read_table(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0] == "r,expectation,cumulative"
    return np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    out = capsys.readouterr() if capsys else None
    return code, out


def test_tables_single_row(tmp_path):
    assert main(["tables", "--k", "1", "--out", str(tmp_path)]) == 0
    assert read_table(tmp_path / "table_df1_k1.csv").tolist() == [[1.0, 1.0, 1.0]]


def test_tables_layout_and_manifest(tmp_path):
    assert main(["tables", "--k", "10,30,100", "--rmax", "30", "--out", str(tmp_path)]) == 0
    t10 = read_table(tmp_path / "table_df1_k10.csv")
    assert t10.shape == (10, 3)
    assert t10[0, 1] == pytest.approx(3.799, abs=1.5e-3)
    t30 = read_table(tmp_path / "table_df1_k30.csv")
    # r_max = N = 30, so the cumulative column closes the sum identity
    assert t30[-1, 2] == pytest.approx(30, abs=1e-3)
    t100 = read_table(tmp_path / "table_df1_k100.csv")
    assert t100.shape == (30, 3) and t100[-1, 2] < 100
    assert np.allclose(np.cumsum(t100[:, 1]), t100[:, 2], atol=1e-9)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["subcommand"] == "tables" and man["parameters"]["k"] == [10, 30, 100]
    assert man["outputs"] == ["table_df1_k10.csv", "table_df1_k30.csv", "table_df1_k100.csv"]


def test_tables_cache_reuse(tmp_path):
    cache = tmp_path / "cache.txt"
    main(["tables", "--k", "50", "--rmax", "5", "--out", str(tmp_path / "a"), "--cache", str(cache)])
    assert len(cache.read_text().splitlines()) == 5
    main(["tables", "--k", "50", "--rmax", "5", "--out", str(tmp_path / "b"), "--cache", str(cache), "--threads", "3"])
    assert (tmp_path / "a" / "table_df1_k50.csv").read_bytes() == (tmp_path / "b" / "table_df1_k50.csv").read_bytes()


def test_tables_numerical_failure(tmp_path, capsys):
    code, out = run(["tables", "--k", "1000", "--rmax", "1", "--tol", "1e-300", "--out", tmp_path], capsys)
    assert code == 3 and "numerical failure" in out.err


def test_noiseless_case2_all_criteria(tmp_path, capsys):
    truth = TrueModelSpec.for_case(2, 30, noise_variance=0.0)
    ds = generate_dataset(truth, 1000, seed=0)
    path = tmp_path / "d.csv"
    write_dataset_csv(path, ds.y, ds.X)
    for crit in ("aic", "sric", "adaptive"):
        code, out = run(["fit", path, "--criterion", crit], capsys)
        assert code == 0
        doc = json.loads(out.out)
        assert doc["selected_order"] == 10
        assert doc["ranking"][:10] == list(range(1, 11))


def test_fit_case1_fixture(capsys):
    code, out = run(["fit", DATA / "case1_k30_seed7.csv", "--criterion", "sric"], capsys)
    assert code == 0
    doc = json.loads(out.out)
    assert doc["selected_order"] == 0
    assert len(doc["criterion_values"]) == 31 and doc["k"] == 30


def test_fit_adaptive_report(tmp_path, capsys):
    code, _ = run(["fit", DATA / "case1_k30_seed7.csv", "--mode", "literal", "--out", tmp_path / "o"], capsys)
    assert code == 0
    doc = json.loads((tmp_path / "o" / "fit.json").read_text())
    assert doc["mode"] == "literal" and set(doc["adaptive"]) >= {"alpha", "w", "penalty"}
    assert isinstance(doc["safeguard_applied"], bool)
    assert main(["rerun", str(tmp_path / "o" / "manifest.json"), "--out", str(tmp_path / "p")]) == 0
    assert (tmp_path / "o" / "fit.json").read_bytes() == (tmp_path / "p" / "fit.json").read_bytes()


def test_malformed_rows(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("y,x1,x2\n1,1,-1\n2,oops,1\n")
    code, out = run(["fit", bad], capsys)
    assert code == 2 and "row 3" in out.err and "x1" in out.err
    bad.write_text("y,x1,x2\n1,1,-1\n2,1\n")
    code, out = run(["fit", bad], capsys)
    assert code == 2 and "row 3" in out.err
    bad.write_text("y,a,b\n1,1,-1\n")
    code, out = run(["fit", bad], capsys)
    assert code == 2 and "header" in out.err


def test_orthogonality_refusal(tmp_path, capsys):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((60, 4)) + 1.0
    y = X[:, 0] + rng.standard_normal(60)
    path = tmp_path / "raw.csv"
    write_dataset_csv(path, y, X)
    code, out = run(["fit", path], capsys)
    assert code == 2 and "--orthogonalize" in out.err
    code, out = run(["fit", path, "--orthogonalize", "--criterion", "aic"], capsys)
    assert code == 0 and json.loads(out.out)["orthogonalized"] is True


def test_missing_file(capsys):
    code, out = run(["fit", "/nonexistent/data.csv"], capsys)
    assert code == 4


def test_csv_roundtrip(tmp_path):
    truth = TrueModelSpec.for_case(4, 20)
    ds = generate_dataset(truth, 300, seed=2)
    path = tmp_path / "g.csv"
    write_dataset_csv(path, ds.y, ds.X)
    y, X = read_dataset_csv(path)
    a = greedy_subset_path(ds)
    b = greedy_subset_path(Dataset(y, X))
    assert np.array_equal(a.ranking, b.ranking)
    assert np.max(np.abs(a.loglik - b.loglik)) <= 1e-12 * np.max(np.abs(a.loglik))


def test_generate_subcommand(tmp_path):
    out = tmp_path / "gen.csv"
    assert main(["generate", "--case", "2", "--k", "10", "--N", "50", "--seed", "1", "--out", str(out)]) == 0
    y, X = read_dataset_csv(out)
    assert X.shape == (50, 10)


def test_simulate_outputs_and_rerun(tmp_path):
    argv = ["simulate", "--case", "1", "--k", "30", "--N", "1000", "--NS", "300", "--seed", "7", "--out", str(tmp_path / "a")]
    assert main(argv + ["--threads", "4"]) == 0
    a = tmp_path / "a"
    man = json.loads((a / "manifest.json").read_text())
    assert man["seed"] == 7 and man["version"] and "threads" not in man["parameters"]
    assert man["outputs"] == ["report.csv", "report.json"]
    header = (a / "report.csv").read_text().splitlines()[0]
    assert header.startswith("m,mean_loglik,mean_expected_loglik,mean_bias,")
    assert main(["rerun", str(a / "manifest.json"), "--out", str(tmp_path / "b"), "--threads", "1"]) == 0
    for name in ("report.csv", "report.json", "manifest.json"):
        assert (a / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_bias_only(tmp_path):
    assert main(["simulate", "--case", "1", "--k", "10", "--N", "200", "--NS", "1", "--criteria", "", "--out", str(tmp_path)]) == 0
    header = (tmp_path / "report.csv").read_text().splitlines()[0]
    assert header == "m,mean_loglik,mean_expected_loglik,mean_bias,mean_bias_increment"


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--case", "1", "--k", "3000", "--N", "1000"],
        ["simulate", "--case", "1", "--k", "30", "--NS", "0"],
        ["simulate", "--case", "1", "--k", "30", "--mmax", "40"],
        ["tables", "--k", "0"],
    ],
)
def test_validation_errors(tmp_path, argv, capsys):
    try:
        code = main(argv + ["--out", str(tmp_path / "x")])
    except SystemExit as exc:
        code = exc.code
    assert code == 2
    assert not (tmp_path / "x" / "report.csv").exists()


def test_bad_manifest(tmp_path, capsys):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"subcommand": "nope", "parameters": {}}))
    code, out = run(["rerun", p, "--out", tmp_path / "o"], capsys)
    assert code == 2
