import io
import math

import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

import lcit.benchmark as bm
from lcit.benchmark import (
    FUNCTION_NAMES,
    RUN_COLUMNS,
    SimConfig,
    auc,
    calibrate,
    classification_metrics,
    function_library,
    generate_instance,
    group_records,
    read_run_csv,
    run_benchmark,
)
from lcit.citest import TestResult, partial_correlation_test, pearson
from lcit.data import Dataset


@pytest.mark.parametrize("name,x,expected", [
    ("tanh", 0.0, 0.0),
    ("sigmoid", 0.0, 0.5),
    ("cube", 2.0, 8.0),
    ("square", -3.0, 9.0),
    ("linear", 1.7, 1.7),
    ("exp_neg", 0.0, 1.0),
    ("inverse", 1.5, 0.5),
    ("inverse", -1.5, -0.5),
])
def test_function_values(name, x, expected):
    assert function_library(name)(np.array(x)) == pytest.approx(expected, abs=1e-15)


def test_function_ids_and_errors():
    for i, name in enumerate(FUNCTION_NAMES):
        assert function_library(i) is function_library(name)
    for bad in (-1, len(FUNCTION_NAMES), "log"):
        with pytest.raises(ValueError):
            function_library(bad)


def test_inverse_has_no_pole():
    v = np.linspace(-1e-9, 1e-9, 11)
    assert np.all(np.abs(function_library("inverse")(v)) <= 2.0)


def test_sigmoid_matches_logistic():
    v = np.linspace(-30, 30, 101)
    np.testing.assert_allclose(function_library("sigmoid")(v), 1 / (1 + np.exp(-v)), atol=1e-15)


def test_same_seed_same_dataset():
    a = generate_instance(SimConfig.random(300, 4, "H1", 17))
    b = generate_instance(SimConfig.random(300, 4, "H1", 17))
    assert np.array_equal(a.columns(), b.columns())
    c = generate_instance(SimConfig.random(300, 4, "H1", 18))
    assert not np.array_equal(a.columns(), c.columns())


def test_h1_coefficient_range():
    for seed in range(50):
        cfg = SimConfig.random(10, 2, "H1", seed)
        assert 1.0 <= cfg.c <= 2.0
        assert all(-1 <= v <= 1 for v in cfg.a + cfg.b)


def test_h0_config_has_no_c():
    cfg = SimConfig.random(10, 3, "H0", 1)
    assert cfg.c is None
    assert "c" not in cfg.to_dict()
    assert "c" in SimConfig.random(10, 3, "H1", 1).to_dict()
    with pytest.raises(ValueError):
        SimConfig(10, 1, "H0", "normal", 0, 0, [0.1], [0.2], c=1.5)


def test_generated_shapes_and_structure():
    cfg = SimConfig(50, 3, "H0", "normal", "linear", "linear", [0.5, -0.2, 0.9], [1, 1, 1], seed=2)
    ds = generate_instance(cfg)
    assert (ds.n, ds.d) == (50, 3)
    assert ds.meta["label"] == "H0"
    assert cfg.to_dict()["f_name"] == "linear" and cfg.f_id == 0
    # linear f on a standardized argument: every z column is standardized
    np.testing.assert_allclose(ds.z.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(ds.z.std(axis=0), 1, atol=1e-12)


def test_noise_family_is_shared():
    cfg = SimConfig(4000, 1, "H0", "uniform", "linear", "linear", [0.0], [0.0], seed=3)
    ds = generate_instance(cfg)
    # X = 2 E_X with uniform(-1, 1) noise
    assert ds.x.min() >= -2 and ds.x.max() <= 2
    assert abs(ds.x.var() - 4 / 3) < 0.1


def test_linear_h0_cell_accepted_by_pcorr():
    accepted = 0
    for seed in range(100):
        ds = generate_instance(SimConfig.random(500, 1, "H0", seed, ("linear", "linear"), "uniform"))
        accepted += partial_correlation_test(ds.x, ds.y, ds.z).independent
    assert accepted >= 90


def test_linear_h0_partial_correlation_centered():
    rs = []
    for seed in range(200):
        ds = generate_instance(SimConfig.random(500, 5, "H0", seed, ("linear", "linear")))
        design = np.column_stack([np.ones(ds.n), ds.z])
        res_x = ds.x - design @ np.linalg.lstsq(design, ds.x, rcond=None)[0]
        res_y = ds.y - design @ np.linalg.lstsq(design, ds.y, rcond=None)[0]
        rs.append(pearson(res_x, res_y))
    assert abs(np.mean(rs)) <= 0.02


def test_auc_examples():
    assert auc([0.9, 0.4, 0.6, 0.1], ["H1", "H0", "H1", "H0"]) == 1.0
    assert auc([0.3] * 6, ["H0", "H1"] * 3) == 0.5
    assert auc([0.1, 0.9], ["H1", "H0"]) == 0.0
    with pytest.raises(ValueError):
        auc([0.1, 0.2], ["H0", "H0"])


@pytest.mark.parametrize("seed", range(10))
def test_auc_matches_trapezoid_roc(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 200))
    labels = rng.integers(0, 2, n)
    labels[:2] = [0, 1]
    scores = np.round(rng.normal(size=n) + 0.5 * labels, 1)  # rounding forces ties
    ours = auc(scores, ["H1" if v else "H0" for v in labels])
    assert abs(ours - roc_auc_score(labels, scores)) <= 1e-10


def test_classification_examples():
    labels = ["H0", "H1"] * 4
    assert classification_metrics(["independent", "dependent"] * 4, labels) == (1.0, 0.0, 0.0)
    f1, t1, t2 = classification_metrics(["dependent"] * 8, labels)
    assert (t1, t2) == (1.0, 0.0)
    # 3 TP, 1 FN, 1 FP, 3 TN
    dec = ["dependent"] * 3 + ["independent"] + ["dependent"] + ["independent"] * 3
    lab = ["H1"] * 4 + ["H0"] * 4
    f1, t1, t2 = classification_metrics(dec, lab)
    assert f1 == pytest.approx(0.75) and t1 == 0.25 and t2 == 0.25


def test_absent_class_rates_are_none():
    f1, t1, t2 = classification_metrics(["independent", "dependent"], ["H0", "H0"])
    assert t2 is None and t1 == 0.5
    f1, t1, t2 = classification_metrics(["dependent"], ["H1"])
    assert t1 is None and t2 == 0.0


def _fake_instance(config):
    # encodes the label in x so that an oracle method can read it back
    flag = 1.0 if config.label == "H1" else 0.0
    return Dataset(np.full(config.n, flag), np.zeros(config.n), np.zeros((config.n, config.d)))


def _oracle(x, y, z, alpha, seed):
    p = 0.0 if x[0] == 1.0 else 0.9
    return TestResult(0.0, 0.0, p, len(x), alpha, "dependent" if p <= alpha else "independent")


def test_stub_oracle_scores_perfectly(monkeypatch):
    monkeypatch.setattr(bm, "generate_instance", _fake_instance)
    reports = run_benchmark([(30, 2), (40, 3)], 2, {"oracle": _oracle}, timing=False)
    assert [(r.n, r.d) for r in reports] == [(30, 2), (40, 3)]
    for r in reports:
        assert (r.f1, r.auc, r.type1, r.type2) == (1.0, 1.0, 0.0, 0.0)
        assert r.n_runs == 4 and r.n_errors == 0
        assert sorted(rec.label for rec in r.records) == ["H0", "H0", "H1", "H1"]


def test_csv_recomputation_matches_report(monkeypatch, tmp_path):
    buf = io.StringIO()
    reports = run_benchmark([(60, 2)], 6, ("pcorr",), seed=4, csv_file=buf)
    path = tmp_path / "runs.csv"
    path.write_text(buf.getvalue(), encoding="utf-8")
    assert buf.getvalue().splitlines()[0] == ",".join(RUN_COLUMNS)
    again = group_records(read_run_csv(path))
    assert [r.to_dict() for r in again] == [r.to_dict() for r in reports]


def test_failed_runs_become_error_rows(monkeypatch):
    monkeypatch.setattr(bm, "generate_instance", _fake_instance)
    calls = []

    def flaky(x, y, z, alpha, seed):
        calls.append(1)
        if len(calls) % 3 == 0:
            raise RuntimeError("nope")
        return _oracle(x, y, z, alpha, seed)

    buf = io.StringIO()
    (rep,) = run_benchmark([(30, 1)], 3, {"flaky": flaky}, csv_file=buf, timing=False)
    assert rep.n_errors == 2 and rep.n_runs == 4
    rows = buf.getvalue().splitlines()[1:]
    errs = [r for r in rows if r.split(",")[6] == "error"]
    assert len(errs) == 2 and all(r.split(",")[5] == "" for r in errs)


def test_benchmark_independent_of_jobs():
    a = run_benchmark([(50, 2)], 3, ("pcorr",), seed=1, timing=False)
    b = run_benchmark([(50, 2)], 3, ("pcorr",), seed=1, timing=False, n_jobs=2)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]


def test_benchmark_needs_a_run():
    with pytest.raises(ValueError):
        run_benchmark([(50, 2)], 0)


def test_calibrate_with_uniform_stub():
    runs = 200
    state = {"i": 0}

    def uniform(x, y, z, alpha, seed):
        p = (state["i"] + 0.5) / runs
        state["i"] += 1
        return TestResult(0.0, 0.0, p, len(x), alpha, "independent")

    rep = calibrate(30, 1, runs, method=uniform)
    assert rep["ks_uniform"] == pytest.approx(0.5 / runs, abs=1e-12)
    assert rep["rejection_rate"] == pytest.approx(0.05)
    assert rep["histogram"]["counts"] == [20] * 10


def test_calibrate_pcorr_linear_cell():
    rep = calibrate(200, 2, 60, seed=2, method="pcorr", functions=("linear", "linear"))
    assert rep["rejection_rate"] <= 0.15
    assert len(rep["p_values"]) == 60
    assert math.isclose(sum(rep["histogram"]["counts"]), 60)
