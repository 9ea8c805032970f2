"""Model-agnostic explanations: Shapley values, permutation importance,
partial dependence, linear feature effects and local surrogates.

Every explainer only calls ``model.predict``.  For classifiers pass
``target`` (a class index) to explain that class's probability; any object
with a ``predict(X) -> ndarray`` method works.

Coalition values use the interventional expectation: features in the
coalition are fixed to the explained row, the rest are taken from each
background row in turn, and predictions are averaged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import KernelWidthError, TooManyFeaturesError, UsageError
from .regress.linear import LinearFit
from .regress.metrics import Attribution

MAX_EXACT_FEATURES = 16
# rows per predict() call when evaluating many coalitions at once
_BATCH_ROWS = 200_000


def _output(model, X: np.ndarray, target: int | None) -> np.ndarray:
    out = np.asarray(model.predict(X), dtype=float)
    if out.ndim == 2:
        if target is None:
            if out.shape[1] == 1:
                return out[:, 0]
            raise UsageError("model returns several outputs; pass target=<class index>")
        return out[:, target]
    return out


def _feature_names(model, d: int) -> list[str]:
    names = getattr(model, "feature_names", None)
    if names is not None and len(names) == d:
        return list(names)
    return [f"x{j}" for j in range(d)]


def _coalition_values(model, x, background, masks: np.ndarray, target) -> np.ndarray:
    """Mean prediction for each coalition mask (rows of booleans)."""
    m, d = background.shape
    out = np.empty(len(masks))
    per_batch = max(1, _BATCH_ROWS // m)
    for start in range(0, len(masks), per_batch):
        chunk = masks[start : start + per_batch]
        Xs = np.where(chunk[:, None, :], x[None, None, :], background[None, :, :])
        preds = _output(model, Xs.reshape(-1, d), target).reshape(len(chunk), m)
        out[start : start + len(chunk)] = preds.mean(axis=1)
    return out


def shapley_exact(model, x, background, target: int | None = None) -> Attribution:
    """Exact Shapley values by enumerating all ``2**d`` coalitions.

    Efficiency holds to rounding: ``baseline + sum(values) == f(x)``.
    """
    x = np.asarray(x, dtype=float).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=float))
    d = x.size
    if background.shape[0] == 0:
        raise UsageError("background sample is empty")
    if background.shape[1] != d:
        raise UsageError("background and x disagree on the number of features")
    if d > MAX_EXACT_FEATURES:
        raise TooManyFeaturesError(
            f"{d} features exceed the exact limit of {MAX_EXACT_FEATURES}; use shapley_sample"
        )
    codes = np.arange(1 << d)
    masks = ((codes[:, None] >> np.arange(d)[None, :]) & 1).astype(bool)
    v = _coalition_values(model, x, background, masks, target)
    sizes = masks.sum(axis=1)
    # weight |S|! (d - |S| - 1)! / d! indexed by |S|
    wts = np.array([math.factorial(s) * math.factorial(d - s - 1) / math.factorial(d) for s in range(d)])
    phi = np.zeros(d)
    for i in range(d):
        bit = 1 << i
        without = codes[(codes & bit) == 0]
        phi[i] = float((wts[sizes[without]] * (v[without | bit] - v[without])).sum())
    return Attribution(
        _feature_names(model, d),
        phi,
        "shapley_exact",
        baseline=float(v[0]),
        meta={"prediction": float(v[-1]), "n_background": int(background.shape[0])},
    )


def shapley_sample(
    model, x, background, n_permutations: int = 1000, seed: int = 0, target: int | None = None
) -> Attribution:
    """Monte-Carlo permutation estimate of Shapley values.

    Walks random feature orders, recording each feature's marginal
    contribution.  Every walk telescopes to ``f(x) - baseline``, so the
    estimate is efficient for any number of permutations.  ``uncertainty``
    holds the standard error of each mean contribution.
    """
    if n_permutations < 1:
        raise UsageError("n_permutations must be >= 1")
    x = np.asarray(x, dtype=float).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=float))
    d = x.size
    if background.shape[0] == 0 or background.shape[1] != d:
        raise UsageError("background must be a non-empty matrix with one column per feature")
    rng = np.random.default_rng(seed)
    perms = np.array([rng.permutation(d) for _ in range(n_permutations)])
    # mask for step t of permutation r: first t features of the order are fixed to x
    pos = np.empty_like(perms)
    np.put_along_axis(pos, perms, np.arange(d)[None, :], axis=1)
    steps = np.arange(d + 1)
    masks = pos[:, None, :] < steps[None, :, None]  # (R, d+1, d)
    v = _coalition_values(model, x, background, masks.reshape(-1, d), target).reshape(
        n_permutations, d + 1
    )
    deltas = np.diff(v, axis=1)  # contribution of perms[r, t]
    contrib = np.empty((n_permutations, d))
    np.put_along_axis(contrib, perms, deltas, axis=1)
    phi = contrib.mean(axis=0)
    se = contrib.std(axis=0, ddof=1) / math.sqrt(n_permutations) if n_permutations > 1 else np.zeros(d)
    return Attribution(
        _feature_names(model, d),
        phi,
        "shapley_sample",
        baseline=float(v[0, 0]),
        uncertainty=se,
        meta={
            "prediction": float(v[0, -1]),
            "n_permutations": n_permutations,
            "seed": seed,
            "n_background": int(background.shape[0]),
        },
    )


def shapley(model, x, background, n_permutations: int = 1000, seed: int = 0, target=None) -> Attribution:
    """Exact enumeration up to the feature limit, sampling beyond it."""
    if np.asarray(x).size <= MAX_EXACT_FEATURES:
        return shapley_exact(model, x, background, target)
    return shapley_sample(model, x, background, n_permutations, seed, target)


# --- permutation importance ----------------------------------------------------


@dataclass
class PermImportance:
    feature_names: list[str]
    importances: np.ndarray
    std: np.ndarray
    K: int
    seed: int
    loss: str

    def to_dict(self) -> dict:
        return {
            "method": f"permutation_importance:{self.loss}",
            "feature_names": list(self.feature_names),
            "values": self.importances.tolist(),
            "uncertainty": self.std.tolist(),
            "K": self.K,
            "seed": self.seed,
        }


def permutation_importance(
    model,
    X,
    y=None,
    loss: Literal["squared_prediction_shift", "error_increase"] = "squared_prediction_shift",
    K: int = 5,
    seed: int = 0,
    target: int | None = None,
) -> PermImportance:
    """Importance of each column measured by permuting it ``K`` times.

    ``squared_prediction_shift`` averages ``mean_i (yhat_i - yhat_i^(k))^2``
    over the repeats; it needs no labels and compares predictions only.
    For a classifier with ``target=None`` the squared shift is summed over
    the class probabilities.
    ``error_increase`` is permuted loss minus baseline loss, with mean
    squared error for regressors and misclassification rate for
    classifiers.

    A feature the model never reads scores exactly 0.  When two columns
    are duplicates and the model reads only one, the other also scores 0,
    so low importance does not imply the information is irrelevant.
    """
    if K < 1:
        raise UsageError("K must be >= 1")
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    rng = np.random.default_rng(seed)
    classifier = bool(getattr(model, "is_classifier", False))

    if loss == "squared_prediction_shift":
        # classifiers without a target compare the whole probability vector
        def pred(Xp):
            if target is None:
                return np.asarray(model.predict(Xp), dtype=float).reshape(len(Xp), -1)
            return _output(model, Xp, target)[:, None]

        base = pred(X)

        def score(Xp):
            return float(((base - pred(Xp)) ** 2).sum(axis=1).mean())

    elif loss == "error_increase":
        if y is None:
            raise UsageError("error_increase needs y")
        y = np.asarray(y)
        if classifier and target is None:

            def err(Xp):
                return float((np.asarray(model.predict(Xp)).argmax(axis=1) != y).mean())

        else:

            def err(Xp):
                return float(((np.asarray(y, float) - _output(model, Xp, target)) ** 2).mean())

        base_err = err(X)

        def score(Xp):
            return err(Xp) - base_err

    else:
        raise UsageError(f"unknown permutation loss {loss!r}")

    scores = np.zeros((K, d))
    for k in range(K):
        for j in range(d):
            Xp = X.copy()
            Xp[:, j] = X[rng.permutation(n), j]
            scores[k, j] = score(Xp)
    return PermImportance(
        _feature_names(model, d),
        scores.mean(axis=0),
        scores.std(axis=0),
        K,
        seed,
        loss,
    )


# --- partial dependence --------------------------------------------------------


@dataclass
class PdpCurve:
    feature: str
    grid: np.ndarray
    pdp_values: np.ndarray
    n_background: int

    def to_dict(self) -> dict:
        return {
            "method": "pdp",
            "feature_names": [self.feature],
            "grid": self.grid.tolist(),
            "values": self.pdp_values.tolist(),
            "n_background": self.n_background,
        }


def quantile_grid(values, g: int = 20) -> np.ndarray:
    """``g`` evenly spaced quantiles of ``values``, deduplicated and sorted."""
    return np.unique(np.quantile(np.asarray(values, dtype=float), np.linspace(0.0, 1.0, g)))


def pdp(model, X, j: int, grid=None, g: int = 20, target: int | None = None) -> PdpCurve:
    """Average prediction over the background with column ``j`` set to each grid value.

    ``grid=None`` uses :func:`quantile_grid` of the background column.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise UsageError("background sample is empty")
    grid = quantile_grid(X[:, j], g) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise UsageError("grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise UsageError("grid must be strictly increasing")
    n = X.shape[0]
    Xs = np.repeat(X[None, :, :], grid.size, axis=0)
    Xs[:, :, j] = grid[:, None]
    preds = _output(model, Xs.reshape(-1, X.shape[1]), target).reshape(grid.size, n)
    name = _feature_names(model, X.shape[1])[j]
    return PdpCurve(name, grid, preds.mean(axis=1), n)


@dataclass
class FeatureEffect:
    feature: str
    grid: np.ndarray
    effect: np.ndarray
    observed: np.ndarray  # per-row w_j * x_ij overlay

    def to_dict(self) -> dict:
        return {
            "method": "feature_effect",
            "feature_names": [self.feature],
            "grid": self.grid.tolist(),
            "values": self.effect.tolist(),
            "observed": self.observed.tolist(),
        }


def feature_effect(fit: LinearFit, X, j: int, grid=None) -> FeatureEffect:
    """Effect line ``w_j * x`` over the observed range of column ``j``."""
    X = np.asarray(X, dtype=float)
    col = X[:, j]
    if grid is None:
        grid = np.unique(col)
    grid = np.asarray(grid, dtype=float)
    w = float(fit.weights[j])
    return FeatureEffect(fit.feature_names[j], grid, w * grid, w * col)


# --- local surrogate -----------------------------------------------------------


@dataclass
class SurrogateFit:
    weights: np.ndarray
    intercept: float
    kernel_width: float
    n_samples: int
    fidelity: float
    feature_names: list[str] = field(default_factory=list)
    fidelity_undefined: bool = False

    def to_dict(self) -> dict:
        return {
            "method": "lime",
            "feature_names": list(self.feature_names),
            "values": self.weights.tolist(),
            "intercept": self.intercept,
            "kernel_width": self.kernel_width,
            "n_samples": self.n_samples,
            "fidelity": self.fidelity,
            "fidelity_undefined": self.fidelity_undefined,
        }


def lime_local(
    model,
    x,
    X_stats: tuple[np.ndarray, np.ndarray],
    n_samples: int = 500,
    kernel_width: float | None = None,
    seed: int = 0,
    ridge: float = 1e-3,
    target: int | None = None,
) -> SurrogateFit:
    """Weighted ridge surrogate fitted to Gaussian perturbations around ``x``.

    Perturbations are ``x + std * N(0, 1)`` per feature; the kernel is
    ``exp(-||u||^2 / width^2)`` with ``u`` the perturbation in standardized
    units.  ``X_stats`` is ``(means, stds)``; the means are kept for
    provenance only.  Weights are reported on the raw feature scale.
    """
    x = np.asarray(x, dtype=float).ravel()
    _, std = (np.asarray(a, dtype=float) for a in X_stats)
    d = x.size
    if n_samples < d + 2:
        raise UsageError(f"n_samples must be >= d + 2 = {d + 2}")
    std = np.where(std > 0, std, 1.0)
    width = 0.75 * math.sqrt(d) if kernel_width is None else float(kernel_width)
    if not width > 0:
        raise KernelWidthError("kernel width must be positive")
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n_samples, d))
    Zs = x + U * std
    f = _output(model, Zs, target)
    kw = np.exp(-(U**2).sum(axis=1) / width**2)
    if not kw.sum() > 0:
        raise KernelWidthError("all kernel weights vanished; increase kernel_width")
    sw = kw.sum()
    u_bar = kw @ U / sw
    # centre on f[0] first so a constant response leaves fc exactly zero
    f0 = f[0]
    fc = (f - f0) - kw @ (f - f0) / sw
    f_bar = float(f0 + kw @ (f - f0) / sw)
    Uc = U - u_bar
    A = Uc.T @ (Uc * kw[:, None]) + ridge * np.eye(d)
    beta_std = np.linalg.solve(A, Uc.T @ (kw * fc))
    ss_tot = float(kw @ fc**2)
    undefined = ss_tot == 0.0
    fidelity = 0.0 if undefined else 1.0 - float(kw @ (fc - Uc @ beta_std) ** 2) / ss_tot
    weights = beta_std / std
    intercept = float(f_bar - beta_std @ u_bar - weights @ x)
    return SurrogateFit(
        weights,
        intercept,
        width,
        n_samples,
        fidelity,
        _feature_names(model, d),
        undefined,
    )
