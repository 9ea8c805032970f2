import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from courtside.dimred import (
    TsneConfig,
    _exact_distances,
    isomap,
    joint_affinities,
    lda_fit,
    mds,
    pca_fit,
    pca_inverse,
    pca_transform,
    stress,
    tsne,
)
from courtside.errors import (
    ConfigError,
    ConnectivityError,
    DegenerateLabelsError,
    DimensionError,
    InvalidDistanceMatrixError,
    UndefinedStressError,
)
from oracles import jacobi_eigh


def exact_cov_sample(cov, n=200, seed=0):
    """Sample whose covariance (ddof=1) is exactly ``cov``."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, len(cov)))
    Z -= Z.mean(axis=0)
    L = np.linalg.cholesky(Z.T @ Z / (n - 1))
    W = Z @ np.linalg.inv(L).T
    return W @ np.linalg.cholesky(cov).T


# --- PCA ---------------------------------------------------------------------


def test_pca_line():
    x = np.linspace(-3, 5, 30)
    p = pca_fit(np.column_stack([x, 2 * x]), 1)
    assert p.explained_variance_ratio[0] == pytest.approx(1.0, abs=1e-9)


def test_pca_diag_ratios():
    p = pca_fit(exact_cov_sample(np.diag([4.0, 1.0])), 2)
    assert np.allclose(p.explained_variance_ratio, [0.8, 0.2], atol=1e-12)


def test_pca_matches_jacobi_oracle():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((60, 5)) @ rng.standard_normal((5, 5))
    p = pca_fit(X, 5)
    Xc = X - X.mean(axis=0)
    w, V = jacobi_eigh(Xc.T @ Xc / 59)
    assert np.allclose(p.eigenvalues, w, atol=1e-10)
    for i in range(5):
        assert abs(abs(p.components[i] @ V[:, i]) - 1) < 1e-9


def test_pca_mean_row_maps_to_zero():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 3))
    p = pca_fit(X, 2)
    assert np.allclose(pca_transform(p, X.mean(axis=0)[None, :]), 0.0, atol=1e-14)


def test_pca_rank1_reconstruction():
    t = np.linspace(0, 1, 25)[:, None]
    X = t @ np.array([[1.0, -2.0, 0.5]]) + np.array([3.0, 1.0, 0.0])
    p = pca_fit(X, 1)
    assert np.abs(pca_inverse(p, pca_transform(p, X)) - X).max() < 1e-8


def test_pca_full_rank_reconstruction():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((40, 6)) * 10
    p = pca_fit(X, 6)
    assert np.abs(pca_inverse(p, pca_transform(p, X)) - X).max() < 1e-8


def test_pca_sign_convention():
    rng = np.random.default_rng(2)
    p = pca_fit(rng.standard_normal((30, 4)), 3)
    for c in p.components:
        assert c[np.argmax(np.abs(c))] > 0


def test_pca_errors():
    X = np.ones((5, 3))
    with pytest.raises(DimensionError):
        pca_fit(X, 0)
    with pytest.raises(DimensionError):
        pca_fit(X, 4)
    p = pca_fit(np.random.default_rng(0).standard_normal((5, 3)), 2)
    with pytest.raises(DimensionError):
        pca_transform(p, np.ones((2, 2)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 30), st.integers(1, 6))
def test_pca_variance_properties(seed, n, d):
    X = np.random.default_rng(seed).standard_normal((n, d)) * 3
    p = pca_fit(X, min(n, d))
    assert np.all(np.diff(np.cumsum(p.explained_variance_ratio)) >= -1e-15)
    total = X.var(axis=0, ddof=1).sum()
    assert abs(p.eigenvalues.sum() - total) <= 1e-8 * max(1.0, total)


# --- stress / MDS ----------------------------------------------------------


def test_stress_examples():
    D = np.array([[0.0, 2.0], [2.0, 0.0]])
    assert stress(D, np.array([[0.0], [1.0]])) == pytest.approx(0.5, abs=1e-15)
    assert stress(D, np.array([[0.0], [2.0]])) == 0.0
    assert stress(D, np.array([[0.0], [4.0]])) > 0


def test_stress_all_zero():
    with pytest.raises(UndefinedStressError):
        stress(np.zeros((3, 3)), np.zeros((3, 1)))


def test_mds_unit_square():
    P = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    D = _exact_distances(P)
    e = mds(D, 2)
    assert np.abs(_exact_distances(e.coords) - D).max() < 1e-9
    assert e.stress < 1e-9


def test_mds_degenerate_zero():
    e = mds(np.zeros((4, 4)), 2)
    assert np.all(e.coords == 0.0)


def test_mds_collinear():
    P = np.array([[0.0], [1.0], [3.5], [7.0]]) @ np.array([[0.6, 0.8]])
    assert mds(_exact_distances(P), 1).stress < 1e-9


def test_mds_invalid_inputs():
    with pytest.raises(InvalidDistanceMatrixError):
        mds(np.array([[0.0, 1.0], [2.0, 0.0]]), 1)
    with pytest.raises(InvalidDistanceMatrixError):
        mds(np.array([[-1.0, 1.0], [1.0, 0.0]]), 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 20), st.integers(1, 4))
def test_mds_stress_small(seed, n, r):
    X = np.random.default_rng(seed).standard_normal((n, r)) * 5
    D = _exact_distances(X)
    k = min(r, n)
    assert mds(D, k).stress < 1e-6


# --- ISOMAP ------------------------------------------------------------------


def test_isomap_complete_graph_equals_mds():
    X = np.random.default_rng(4).standard_normal((15, 3))
    a = isomap(X, 2, 14)
    b = mds(_exact_distances(X), 2)
    assert np.abs(_exact_distances(a.coords) - _exact_distances(b.coords)).max() < 1e-9


def test_isomap_quarter_circle_order():
    t = np.linspace(0, np.pi / 2, 20)
    X = np.column_stack([np.cos(t), np.sin(t)])
    z = isomap(X, 1, 2).coords[:, 0]
    d = np.diff(z)
    assert np.all(d > 0) or np.all(d < 0)


def test_isomap_disconnected():
    X = np.vstack([np.zeros((5, 2)) + np.arange(5)[:, None] * 0.01, np.full((5, 2), 100.0) + np.arange(5)[:, None] * 0.01])
    with pytest.raises(ConnectivityError) as err:
        isomap(X, 1, 1)
    assert err.value.n_components >= 2


def test_isomap_bad_neighbors():
    with pytest.raises(ConfigError):
        isomap(np.zeros((3, 2)), 1, 3)


# --- LDA ---------------------------------------------------------------------


def test_lda_direction_along_mean_difference():
    A = exact_cov_sample(np.eye(2), 100, 1)
    B = exact_cov_sample(np.eye(2), 100, 2) + np.array([1.0, 0.0])
    X = np.vstack([A - A.mean(0), B - B.mean(0) + [1.0, 0.0]])
    y = np.array([0] * 100 + [1] * 100)
    m = lda_fit(X, y, 1)
    assert np.allclose(np.abs(m.directions[0]), [1.0, 0.0], atol=1e-6)


def test_lda_duplicate_samples():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((30, 3))
    y = np.arange(30) % 3
    a = lda_fit(X, y, 2)
    b = lda_fit(np.vstack([X, X]), np.concatenate([y, y]), 2)
    assert np.allclose(a.directions, b.directions, atol=1e-9)


def test_lda_blobs_nn_accuracy():
    rng = np.random.default_rng(6)
    centers = np.array([[0, 0, 0, 0], [6, 0, 0, 0], [0, 6, 0, 0]], dtype=float)
    y = np.repeat(np.arange(3), 60)
    X = centers[y] + rng.standard_normal((180, 4))
    m = lda_fit(X, y, 2)
    Z = m.transform(X)
    D = _exact_distances(Z) + np.diag(np.full(180, np.inf))
    assert (y[np.argmin(D, axis=1)] == y).mean() >= 0.95
    q = m.rayleigh_quotients()
    assert q[0] >= q[1]


def test_lda_single_class():
    with pytest.raises(DegenerateLabelsError):
        lda_fit(np.ones((4, 2)), [1, 1, 1, 1], 1)


# --- t-SNE -------------------------------------------------------------------


def two_clusters(seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((10, 3))
    b = rng.standard_normal((10, 3)) + 100.0
    return np.vstack([a, b])


def two_means(Y, iters=50):
    i, j = np.unravel_index(np.argmax(_exact_distances(Y)), (len(Y), len(Y)))
    c = Y[[i, j]].copy()
    for _ in range(iters):
        lab = np.linalg.norm(Y - c[0], axis=1) > np.linalg.norm(Y - c[1], axis=1)
        c = np.array([Y[~lab].mean(axis=0), Y[lab].mean(axis=0)])
    return lab


def test_tsne_clusters_separate_and_kl_drops():
    e = tsne(two_clusters(), TsneConfig(perplexity=5.0, seed=1))
    assert e.objective_trace[-1] < e.objective_trace[0]
    assert e.params["max_perplexity_error"] < 1e-5
    lab = two_means(e.coords)
    truth = np.arange(20) >= 10
    assert np.all(lab == truth) or np.all(lab != truth)


def test_tsne_perplexity_calibration():
    X = np.random.default_rng(7).standard_normal((40, 5))
    _, perp = joint_affinities(X, 10.0)
    assert np.abs(perp - 10.0).max() < 1e-5


def test_tsne_deterministic():
    X = two_clusters(2)
    cfg = TsneConfig(perplexity=4.0, iterations=50, seed=3)
    assert np.array_equal(tsne(X, cfg).coords, tsne(X, cfg).coords)


def test_tsne_perplexity_too_large():
    with pytest.raises(ConfigError):
        tsne(np.random.default_rng(0).standard_normal((10, 2)), TsneConfig(perplexity=9.0))
