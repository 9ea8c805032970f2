"""Acceptance suite: one group of tests per numbered criterion.

Every test carries ``@pytest.mark.criterion(n, title)``; the summary hook in
``conftest.py`` prints one PASS/FAIL line per criterion after the run.
Runtime budgets are asserted with wall-clock timers inside the tests.
"""

import json
import time

import numpy as np
import pytest

from courtside.cli import main
from courtside.dimred import (
    TsneConfig,
    _exact_distances,
    isomap,
    mds,
    pca_fit,
    pca_inverse,
    pca_transform,
    tsne,
)
from courtside.explain import shapley_exact, shapley_sample
from courtside.pipeline import bundled_path
from courtside.regress import (
    GlmSpec,
    LinearFit,
    LinearModel,
    MlpSpec,
    fit_huber,
    fit_lasso,
    fit_ols,
    fit_ridge,
    fit_tree,
    fit_tweedie,
    lasso_alpha_max,
    mlp_train,
    r2_score,
)
from courtside.regress.mlp import init_params, loss_and_grad
from courtside.stats import one_way_anova, tukey_hsd
from courtside.tabular import SplitSpec, load_csv, split_indices
from oracles import central_difference, f_survival_df1_2

criterion = pytest.mark.criterion


def four_factors_standardized():
    t = load_csv(bundled_path("four_factors.csv"))
    X = t.matrix(t.names[:8])
    return (X - X.mean(0)) / X.std(0), np.array(t.column("W"))


# --- 1. Shapley correctness ----------------------------------------------------------


@criterion(1, "Shapley correctness")
def test_c1_linear_closed_form():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    w = rng.normal(size=5)
    b = 0.7
    model = LinearModel(LinearFit(w, b, 0.0, tuple(f"x{j}" for j in range(5))))
    bg = rng.normal(size=(40, 5))
    worst = 0.0
    for _ in range(100):
        x = rng.normal(size=5) * 2
        phi = shapley_exact(model, x, bg).values
        worst = max(worst, float(np.abs(phi - w * (x - bg.mean(axis=0))).max()))
    assert worst < 1e-9
    assert time.perf_counter() - start < 5


@criterion(1, "Shapley correctness")
def test_c1_efficiency_every_fixture_row():
    start = time.perf_counter()
    X, y = four_factors_standardized()
    models = {
        "linear": LinearModel(fit_ols(X, y)),
        "tree": fit_tree(X, y, max_depth=5),
        "mlp": mlp_train(X, y, MlpSpec((8, 16, 1), output="identity", epochs=20)),
    }
    bg = X[:100]
    for name, m in models.items():
        fx = m.predict(X)
        for i, x in enumerate(X):
            a = shapley_exact(m, x, bg)
            assert abs(a.baseline + a.values.sum() - fx[i]) < 1e-9, (name, i)
    assert time.perf_counter() - start < 5


# --- 2. Shapley sampling consistency ------------------------------------------------------


@criterion(2, "Shapley sampling consistency")
def test_c2_sampling_within_three_se():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    X = rng.standard_normal((300, 6))
    y = X[:, 0] * X[:, 1] + np.sin(3 * X[:, 2]) + X[:, 3] * (X[:, 4] > 0) + 0.5 * X[:, 5]
    tree = fit_tree(X, y, max_depth=6)
    bg = X[:50]
    inside = 0
    for trial in range(50):
        x = X[100 + trial]
        exact = shapley_exact(tree, x, bg).values
        est = shapley_sample(tree, x, bg, 2000, seed=trial)
        # a trial counts only if every feature is within 3 SE
        inside += bool(np.all(np.abs(est.values - exact) <= 3 * est.uncertainty + 1e-12))
    assert inside / 50 >= 0.95
    assert time.perf_counter() - start < 60


# --- 3. ANOVA oracle -----------------------------------------------------------------------


@criterion(3, "ANOVA oracle")
def test_c3_hand_example():
    r = one_way_anova([[1, 2, 3], [2, 3, 4], [3, 4, 5]])
    assert r.ssb == 6.0 and r.ssw == 6.0 and r.f_stat == 3.0
    assert abs(r.p_value - 0.125) < 1e-10
    assert abs(r.p_value - f_survival_df1_2(3.0, 6)) < 1e-10


@criterion(3, "ANOVA oracle")
def test_c3_partition():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        groups = [rng.normal(rng.normal(0, 5), rng.uniform(0.1, 3), rng.integers(2, 25)) for _ in range(rng.integers(2, 8))]
        r = one_way_anova(groups)
        assert abs(r.sst - (r.ssb + r.ssw)) <= 1e-8 * r.sst


# --- 4. Tukey FWER -------------------------------------------------------------------------


@criterion(4, "Tukey FWER")
def test_c4_null_fwer():
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    false_alarms = sum(
        tukey_hsd(list(rng.standard_normal((5, 20))), 0.05).n_rejections > 0 for _ in range(2000)
    )
    assert 0.03 <= false_alarms / 2000 <= 0.07
    assert time.perf_counter() - start < 120


@criterion(4, "Tukey FWER")
def test_c4_roles_fixture():
    t = load_csv(bundled_path("roles.csv"))
    names = sorted(set(t.column("ROLE")))
    groups = [[v for v, g in zip(t.column("DRPM"), t.column("ROLE")) if g == n] for n in names]
    r = tukey_hsd(groups, 0.05, names)
    assert len(r.comparisons) == 10
    assert r.n_rejections == 7


# --- 5. Dimensionality reduction -------------------------------------------------------------


@criterion(5, "Dimensionality reduction")
def test_c5_mds_stress():
    rng = np.random.default_rng(5)
    for n in range(2, 21):
        for r in (1, 2, 3):
            P = rng.standard_normal((n, r)) * rng.uniform(0.1, 10)
            D = _exact_distances(P)
            for k in range(min(r, n), min(r + 2, n) + 1):
                assert mds(D, k).stress < 1e-6


@criterion(5, "Dimensionality reduction")
def test_c5_isomap_complete_equals_mds():
    rng = np.random.default_rng(6)
    for n in (5, 12, 20):
        X = rng.standard_normal((n, 4))
        a = isomap(X, 3, n - 1).coords
        b = mds(_exact_distances(X), 3).coords
        assert np.abs(_exact_distances(a) - _exact_distances(b)).max() < 1e-9


@criterion(5, "Dimensionality reduction")
def test_c5_pca_full_rank_reconstruction():
    X, _ = four_factors_standardized()
    p = pca_fit(X * 7 + 3, 8)
    assert np.abs(pca_inverse(p, pca_transform(p, X * 7 + 3)) - (X * 7 + 3)).max() < 1e-8


@criterion(5, "Dimensionality reduction")
def test_c5_tsne_cluster_fixture():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.standard_normal((10, 3)), rng.standard_normal((10, 3)) + 100.0])
    e = tsne(X, TsneConfig(perplexity=5.0, seed=1))
    assert e.objective_trace[-1] < e.objective_trace[0]
    assert e.params["max_perplexity_error"] < 1e-5


# --- 6. Regression family -----------------------------------------------------------------------


@criterion(6, "Regression family")
def test_c6_ols_noiseless():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((50, 4))
    w = np.array([1.5, -2.0, 0.25, 3.0])
    y = X @ w - 4.0
    f = fit_ols(X, y)
    assert r2_score(y, LinearModel(f).predict(X)) == pytest.approx(1.0, abs=1e-12)
    assert np.abs(f.weights - w).max() < 1e-8 and abs(f.intercept + 4.0) < 1e-8


@criterion(6, "Regression family")
def test_c6_ridge_and_lasso_thresholds():
    X, y = four_factors_standardized()
    o = fit_ols(X, y)
    assert np.abs(fit_ridge(X, y, 0.0).weights - o.weights).max() < 1e-8
    assert np.abs(fit_lasso(X, y, 0.0, tol=1e-14).weights - o.weights).max() < 1e-8
    norms = [np.linalg.norm(fit_ridge(X, y, a).weights) for a in (0.5, 5, 50)]
    assert norms[0] < np.linalg.norm(o.weights) and norms[0] > norms[1] > norms[2]
    a_max = lasso_alpha_max(X, y)
    assert a_max == pytest.approx(np.abs(X.T @ (y - y.mean())).max() / len(y), rel=1e-12)
    assert np.all(fit_lasso(X, y, a_max).weights == 0.0)
    assert np.any(fit_lasso(X, y, 0.999 * a_max).weights != 0.0)


@criterion(6, "Regression family")
def test_c6_huber_outlier():
    x = np.arange(1.0, 21.0)
    y = x.copy()
    y[-1] += 1000
    he = abs(fit_huber(x[:, None], y).weights[0] - 1)
    oe = abs(fit_ols(x[:, None], y).weights[0] - 1)
    assert oe >= 5 * he


@criterion(6, "Regression family")
def test_c6_tweedie_gaussian():
    X, y = four_factors_standardized()
    t = fit_tweedie(X, y, GlmSpec(power=0, link="identity"))
    o = fit_ols(X, y)
    assert np.abs(t.weights - o.weights).max() < 1e-8 and abs(t.intercept - o.intercept) < 1e-8


# --- 7. MLP -----------------------------------------------------------------------------------------


@criterion(7, "MLP")
def test_c7_gradient_check():
    rng = np.random.default_rng(3)
    params = init_params((4, 3, 2), rng)
    X = rng.standard_normal((9, 4))
    y = rng.integers(0, 2, 9)
    _, grads = loss_and_grad(params, X, y, "softmax")
    worst = 0.0
    for (W, b), (gW, gb) in zip(params, grads):
        for arr, g in ((W, gW), (b, gb)):
            num = central_difference(lambda: loss_and_grad(params, X, y, "softmax")[0], arr)
            worst = max(worst, float((np.abs(num - g) / np.maximum(np.abs(num) + np.abs(g), 1e-8)).max()))
    assert worst < 1e-4


@criterion(7, "MLP")
def test_c7_roles_architecture():
    start = time.perf_counter()
    t = load_csv(bundled_path("roles.csv"))
    feats = [n for n in t.names if n != "ROLE"]
    X = t.matrix(feats)
    labels = sorted(set(t.column("ROLE")))
    y = np.array([labels.index(v) for v in t.column("ROLE")])
    train, test = split_indices(len(y), SplitSpec(0.2, 0))
    lo, hi = X[train].min(0), X[train].max(0)
    Xs = (X - lo) / np.where(hi > lo, hi - lo, 1.0)
    spec = MlpSpec((46, 40, 30, 5), (0.5, 0.5), epochs=200, seed=0)
    rep = mlp_train(Xs[train], y[train], spec, validation=(Xs[test], y[test])).report
    assert len(rep.val_accuracy) == 200
    assert rep.val_accuracy[-1] >= 0.90
    assert time.perf_counter() - start < 180


# --- 8-10. Bundled pipelines --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def bundled_runs(tmp_path_factory):
    runs = {}
    for name in ("four_factors", "salary", "roles"):
        dirs = []
        for rep in range(2):
            out = tmp_path_factory.mktemp(f"{name}{rep}")
            assert main(["run", f"{name}.cfg", "--out-dir", str(out)]) == 0
            dirs.append(out)
        runs[name] = dirs
    return runs


def report(runs, name):
    return json.loads((runs[name][0] / "report.json").read_text())


@criterion(8, "Four-factors pipeline")
def test_c8_four_factors(bundled_runs):
    rep = report(bundled_runs, "four_factors")
    assert rep["model"] == "ols"
    assert 0.75 <= rep["metrics"]["r2"] <= 0.87
    w = rep["model_summary"]["weights"]["weights"]
    assert ["+" if v > 0 else "-" for v in w] == ["+", "-", "-", "+", "+", "-", "+", "-"]


@criterion(9, "Salary pipeline")
def test_c9_salary(bundled_runs):
    rep = report(bundled_runs, "salary")
    base = rep["degree1_baseline"]
    assert rep["poly_degree"] == 2
    assert rep["metrics"]["r2"] - base["metrics"]["r2"] >= 0.10
    coefs = dict(zip(base["standardized_coefficients"]["feature_names"], base["standardized_coefficients"]["values"]))
    truth = {"PTS": 0.7180, "AGE": 0.4837, "DRPM": 0.3847, "ORPM": -0.0165, "TFC": -0.0036}
    for k, v in truth.items():
        assert abs(coefs[k] - v) <= 0.05, (k, coefs[k])


@criterion(10, "Determinism")
@pytest.mark.parametrize("name", ["four_factors", "salary", "roles"])
def test_c10_byte_identical(bundled_runs, name):
    a, b = bundled_runs[name]
    outputs = sorted(p.name for p in a.iterdir() if p.suffix in (".json", ".svg"))
    assert "report.json" in outputs and any(o.endswith(".svg") for o in outputs)
    for fname in outputs:
        assert (a / fname).read_bytes() == (b / fname).read_bytes(), fname
