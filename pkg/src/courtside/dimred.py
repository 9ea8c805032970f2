"""Dimensionality reduction: PCA, classical MDS, ISOMAP, Fisher LDA, t-SNE.

All routines take dense float matrices (rows are samples) and return
frozen result objects that serialize with ``to_dict``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import (
    ConfigError,
    ConnectivityError,
    DegenerateLabelsError,
    DimensionError,
    InvalidDistanceMatrixError,
    UndefinedStressError,
)


def _orient(vectors: np.ndarray, axis: int) -> np.ndarray:
    """Flip each vector so its largest-magnitude entry is positive.

    ``axis`` is the axis along which a single vector runs.
    """
    v = np.array(vectors, dtype=float, copy=True)
    moved = np.moveaxis(v, axis, 0)
    if moved.size == 0:
        return v
    idx = np.argmax(np.abs(moved), axis=0)
    signs = np.sign(np.take_along_axis(moved, idx[None, :], axis=0))[0]
    signs[signs == 0] = 1.0
    moved *= signs
    return v


def _sym_eigh_desc(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    S = (S + S.T) / 2
    w, V = np.linalg.eigh(S)
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


# --- PCA ---------------------------------------------------------------------


@dataclass(frozen=True)
class Projection:
    """Fitted PCA.

    ``components`` holds the top-k principal axes as rows.  ``eigenvalues``
    and ``explained_variance_ratio`` cover *all* d axes so a scree plot can
    be drawn from one fit; slice ``[:k]`` for the retained ones.
    """

    components: np.ndarray
    eigenvalues: np.ndarray
    explained_variance_ratio: np.ndarray
    column_means: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def to_dict(self) -> dict:
        return {
            "method": "pca",
            "params": {"k": self.k},
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "column_means": self.column_means.tolist(),
        }


def pca_fit(X: np.ndarray, k: int) -> Projection:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError("X must be 2-D")
    n, d = X.shape
    if not 1 <= k <= min(n, d):
        raise DimensionError(f"k={k} outside [1, min(n, d)={min(n, d)}]")
    means = X.mean(axis=0)
    Xc = X - means
    cov = Xc.T @ Xc / max(n - 1, 1)
    w, V = _sym_eigh_desc(cov)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    ratio = w / total if total > 0 else np.zeros_like(w)
    comps = _orient(V[:, :k].T, axis=1)
    return Projection(comps, w, ratio, means)


def pca_transform(p: Projection, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != p.components.shape[1]:
        raise DimensionError(f"expected {p.components.shape[1]} columns")
    return (X - p.column_means) @ p.components.T


def pca_inverse(p: Projection, Z: np.ndarray) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[1] != p.k:
        raise DimensionError(f"expected {p.k} columns")
    return Z @ p.components + p.column_means


# --- MDS / ISOMAP ------------------------------------------------------------


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray
    stress: float | None = None
    objective_trace: np.ndarray | None = None
    method: str = ""
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"method": self.method, "params": dict(self.params), "coords": self.coords.tolist()}
        if self.stress is not None:
            d["stress"] = self.stress
        if self.objective_trace is not None:
            d["objective_trace"] = self.objective_trace.tolist()
        return d


def pairwise_distances(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    sq = (X**2).sum(axis=1)
    D2 = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.maximum(D2, 0.0, out=D2)
    np.fill_diagonal(D2, 0.0)
    return np.sqrt(D2)


def _exact_distances(X: np.ndarray) -> np.ndarray:
    # direct differences; no cancellation, used where 1e-9 agreement matters
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def _check_distance_matrix(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise InvalidDistanceMatrixError("distance matrix must be square")
    if not np.all(np.isfinite(D)):
        raise InvalidDistanceMatrixError("distance matrix has non-finite entries")
    scale = max(1.0, float(np.abs(D).max(initial=0.0)))
    if np.any(np.abs(D - D.T) > 1e-12 * scale):
        raise InvalidDistanceMatrixError("distance matrix is not symmetric")
    if np.any(np.diag(D) != 0.0):
        raise InvalidDistanceMatrixError("distance matrix diagonal must be zero")
    if np.any(D < 0):
        raise InvalidDistanceMatrixError("distance matrix has negative entries")
    return (D + D.T) / 2


def stress(D: np.ndarray, X: np.ndarray) -> float:
    """Normalized stress between target distances and embedded distances."""
    D = _check_distance_matrix(D)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != D.shape[0]:
        raise DimensionError("embedding and distance matrix disagree on n")
    denom = float((D**2).sum())
    if denom == 0.0:
        raise UndefinedStressError("stress undefined for an all-zero distance matrix")
    delta = _exact_distances(X)
    return float(np.sqrt(((D - delta) ** 2).sum() / denom))


def mds(D: np.ndarray, k: int) -> Embedding:
    """Classical (Torgerson) MDS on a precomputed distance matrix."""
    D = _check_distance_matrix(D)
    n = D.shape[0]
    if not 1 <= k <= n:
        raise DimensionError(f"k={k} outside [1, n={n}]")
    B = -0.5 * D**2
    # double centering J B J
    B = B - B.mean(axis=0, keepdims=True) - B.mean(axis=1, keepdims=True) + B.mean()
    w, V = _sym_eigh_desc(B)
    lam = np.clip(w[:k], 0.0, None)
    coords = _orient(V[:, :k] * np.sqrt(lam), axis=0)
    s = None if not (D > 0).any() else stress(D, coords)
    return Embedding(coords, s, method="mds", params={"k": k})


def isomap(X: np.ndarray, k: int, n_neighbors: int) -> Embedding:
    """Geodesic MDS over the symmetrized Euclidean k-nearest-neighbour graph."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n_neighbors < 1:
        raise ConfigError("n_neighbors must be >= 1")
    if n_neighbors > n - 1:
        raise ConfigError(f"n_neighbors={n_neighbors} exceeds n - 1 = {n - 1}")
    E = _exact_distances(X)
    # neighbours by distance, ties by index
    order = np.argsort(E + np.diag(np.full(n, np.inf)), axis=1, kind="stable")[:, :n_neighbors]
    W = np.zeros((n, n))
    rows = np.repeat(np.arange(n), n_neighbors)
    cols = order.ravel()
    W[rows, cols] = E[rows, cols]
    W = np.maximum(W, W.T)
    graph = csr_matrix(W)
    n_comp, _ = connected_components(graph, directed=False)
    if n_comp > 1:
        raise ConnectivityError(n_comp)
    G = dijkstra(graph, directed=False)
    G = (G + G.T) / 2
    emb = mds(G, k)
    return Embedding(
        emb.coords, emb.stress, method="isomap", params={"k": k, "n_neighbors": n_neighbors}
    )


# --- LDA ---------------------------------------------------------------------


@dataclass(frozen=True)
class LdaModel:
    directions: np.ndarray  # (k, d), unit rows
    within_scatter: np.ndarray
    between_scatter: np.ndarray
    classes: tuple
    eigenvalues: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.directions.T

    def rayleigh_quotients(self) -> np.ndarray:
        W = self.directions
        num = np.einsum("ki,ij,kj->k", W, self.between_scatter, W)
        den = np.einsum("ki,ij,kj->k", W, self.within_scatter, W)
        return num / den

    def to_dict(self) -> dict:
        return {
            "method": "lda",
            "params": {"k": int(self.directions.shape[0])},
            "components": self.directions.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "classes": [str(c) for c in self.classes],
        }


def lda_fit(X: np.ndarray, y, k: int) -> LdaModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes = tuple(np.unique(y).tolist())
    if len(classes) < 2:
        raise DegenerateLabelsError("LDA needs at least two classes")
    if not 1 <= k <= len(classes) - 1:
        raise DimensionError(f"k={k} outside [1, n_classes - 1 = {len(classes) - 1}]")
    d = X.shape[1]
    mu = X.mean(axis=0)
    Sw = np.zeros((d, d))
    Sb = np.zeros((d, d))
    for c in classes:
        Xc = X[y == c]
        mc = Xc.mean(axis=0)
        R = Xc - mc
        Sw += R.T @ R
        diff = (mc - mu)[:, None]
        Sb += len(Xc) * diff @ diff.T
    Sw = (Sw + Sw.T) / 2
    Sb = (Sb + Sb.T) / 2
    ridge = 1e-9 * np.trace(Sw) / d
    Sw_reg = Sw + ridge * np.eye(d) if ridge > 0 else Sw + 1e-12 * np.eye(d)
    # S_w^{-1} S_b via the symmetric form L^{-1} S_b L^{-T}
    L = np.linalg.cholesky(Sw_reg)
    Linv = np.linalg.inv(L)
    M = Linv @ Sb @ Linv.T
    w, V = _sym_eigh_desc(M)
    dirs = (Linv.T @ V[:, :k]).T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = _orient(dirs, axis=1)
    return LdaModel(dirs, Sw_reg, Sb, classes, w[:k])


# --- t-SNE -------------------------------------------------------------------


@dataclass(frozen=True)
class TsneConfig:
    """Exact t-SNE settings.

    ``perplexity=None`` means 30, capped at ``(n - 2) / 3`` for small n.
    """

    perplexity: float | None = None
    out_dim: int = 2
    iterations: int = 500
    learning_rate: float = 100.0
    momentum: float = 0.5
    final_momentum: float = 0.8
    momentum_switch: int = 250
    exaggeration: float = 4.0
    exaggeration_iters: int = 100
    init_std: float = 1e-4
    seed: int = 0

    def resolved_perplexity(self, n: int) -> float:
        if self.perplexity is None:
            return min(30.0, (n - 2) / 3.0)
        return float(self.perplexity)

    def validate(self, n: int) -> None:
        if n < 4:
            raise ConfigError("t-SNE needs at least 4 samples")
        perp = self.resolved_perplexity(n)
        if not 1.0 < perp < n - 1:
            raise ConfigError(f"perplexity {perp} must lie in (1, n - 1 = {n - 1})")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.out_dim < 1:
            raise ConfigError("out_dim must be >= 1")


def conditional_affinities(
    sq_dists: np.ndarray, perplexity: float, tol: float = 1e-5, max_iter: int = 200
) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise Gaussian affinities ``p_{j|i}`` with entropy matched to ``perplexity``.

    Bisection on the precision ``beta = 1 / (2 sigma^2)`` for every row at
    once.  Returns ``(P_conditional, achieved_perplexity)``.
    """
    n = sq_dists.shape[0]
    target = np.log(perplexity)  # entropy in nats
    D = sq_dists.copy()
    np.fill_diagonal(D, np.inf)
    # shift by the nearest-neighbour distance so exp() never underflows entirely
    D = D - D.min(axis=1, keepdims=True)
    D_finite = np.where(np.isfinite(D), D, 0.0)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    beta = np.ones(n)
    done = np.zeros(n, dtype=bool)
    P = np.zeros((n, n))
    perp = np.zeros(n)

    def evaluate(b):
        W = np.exp(-D * b[:, None])
        s = W.sum(axis=1)
        Pc = W / s[:, None]
        # H = log s + b * E[D]
        H = np.log(s) + b * (D_finite * Pc).sum(axis=1)
        return Pc, H

    for _ in range(max_iter):
        Pc, H = evaluate(beta)
        cur = np.exp(H)
        newly = (~done) & (np.abs(cur - perplexity) < tol)
        active = ~done
        P[active] = Pc[active]
        perp[active] = cur[active]
        done |= newly
        if done.all():
            break
        too_flat = H > target  # entropy too high -> sharpen
        upd = ~done
        lo = np.where(upd & too_flat, beta, lo)
        hi = np.where(upd & ~too_flat, beta, hi)
        beta = np.where(
            upd,
            np.where(np.isinf(hi), beta * 2.0, (lo + hi) / 2.0),
            beta,
        )
    return P, perp


def joint_affinities(X: np.ndarray, perplexity: float) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric ``p_ij = (p_{j|i} + p_{i|j}) / 2n`` plus per-point perplexities."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    diff = X[:, None, :] - X[None, :, :]
    sq = (diff**2).sum(axis=-1)
    Pc, perp = conditional_affinities(sq, perplexity)
    P = (Pc + Pc.T) / (2.0 * n)
    np.fill_diagonal(P, 0.0)
    return P, perp


def _student_q(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    diff = Y[:, None, :] - Y[None, :, :]
    num = 1.0 / (1.0 + (diff**2).sum(axis=-1))
    np.fill_diagonal(num, 0.0)
    return num / num.sum(), num


def kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0
    return float((P[mask] * np.log(P[mask] / np.maximum(Q[mask], 1e-300))).sum())


def tsne(X: np.ndarray, cfg: TsneConfig = TsneConfig()) -> Embedding:
    """Exact t-SNE by momentum gradient descent on KL(P || Q).

    ``objective_trace[0]`` is the KL at the initial layout and entry ``t``
    the KL after iteration ``t`` (always against the un-exaggerated P).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    cfg.validate(n)
    perplexity = cfg.resolved_perplexity(n)
    P, perp = joint_affinities(X, perplexity)

    rng = np.random.default_rng(cfg.seed)
    Y = rng.normal(0.0, cfg.init_std, size=(n, cfg.out_dim))
    update = np.zeros_like(Y)
    Q, _ = _student_q(Y)
    trace = [kl_divergence(P, Q)]
    for it in range(cfg.iterations):
        exag = cfg.exaggeration if it < cfg.exaggeration_iters else 1.0
        mom = cfg.momentum if it < cfg.momentum_switch else cfg.final_momentum
        Q, num = _student_q(Y)
        W = (exag * P - Q) * num
        grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)
        update = mom * update - cfg.learning_rate * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)
        Q, _ = _student_q(Y)
        trace.append(kl_divergence(P, Q))
    return Embedding(
        Y,
        None,
        np.asarray(trace),
        method="tsne",
        params={
            "perplexity": perplexity,
            "out_dim": cfg.out_dim,
            "iterations": cfg.iterations,
            "learning_rate": cfg.learning_rate,
            "seed": cfg.seed,
            "max_perplexity_error": float(np.max(np.abs(perp - perplexity))),
        },
    )
