"""Linear model family: OLS, ridge, lasso, Huber, and Tweedie GLMs.

Every fitter returns a :class:`LinearFit`; wrap it in
:class:`~courtside.regress.models.LinearModel` to get a predictor.  The
intercept is never penalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from ..errors import DomainError, ParameterError, UnderdeterminedError


@dataclass(frozen=True)
class GlmSpec:
    power: float = 1.5
    dispersion: float = 1.0
    link: Literal["identity", "log"] = "log"

    def __post_init__(self):
        p = self.power
        if not (p == 0 or 1 <= p <= 2):
            raise ParameterError(f"Tweedie power must be 0 or in [1, 2], got {p}")
        if not self.dispersion > 0:
            raise ParameterError("dispersion must be positive")
        if self.link not in ("identity", "log"):
            raise ParameterError(f"unknown link {self.link!r}")
        if self.link == "identity" and p != 0:
            raise ParameterError("identity link is only supported for power 0")

    def to_dict(self) -> dict:
        return {"power": self.power, "dispersion": self.dispersion, "link": self.link}


@dataclass(frozen=True)
class LinearFit:
    weights: np.ndarray
    intercept: float
    residual_variance: float
    feature_names: tuple[str, ...]
    weight_stderr: np.ndarray | None = None
    method: str = "ols"
    params: dict = field(default_factory=dict)
    n_iter: int = 0
    converged: bool = True
    singular: bool = False
    trace: tuple[float, ...] = ()

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.intercept

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "params": dict(self.params),
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "residual_variance": self.residual_variance,
            "feature_names": list(self.feature_names),
            "weight_stderr": None if self.weight_stderr is None else self.weight_stderr.tolist(),
            "n_iter": self.n_iter,
            "converged": self.converged,
            "singular": self.singular,
        }

    @classmethod
    def from_dict(cls, d: dict) -> LinearFit:
        se = d.get("weight_stderr")
        return cls(
            weights=np.asarray(d["weights"], dtype=float),
            intercept=float(d["intercept"]),
            residual_variance=float(d["residual_variance"]),
            feature_names=tuple(d["feature_names"]),
            weight_stderr=None if se is None else np.asarray(se, dtype=float),
            method=d.get("method", "ols"),
            params=dict(d.get("params", {})),
            n_iter=int(d.get("n_iter", 0)),
            converged=bool(d.get("converged", True)),
            singular=bool(d.get("singular", False)),
        )


def _prepare(X, y, feature_names):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y have different numbers of rows")
    names = tuple(feature_names) if feature_names is not None else tuple(
        f"x{j}" for j in range(X.shape[1])
    )
    if len(names) != X.shape[1]:
        raise ValueError("feature_names length does not match X")
    return X, y, names


def _solve_spd(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Solve ``A x = b`` for symmetric PSD ``A``; jitter the diagonal if singular.

    Returns the solution, ``A^{-1}`` (as used) and whether jitter was added.
    """
    d = A.shape[0]
    if d == 0:
        return np.zeros(0), np.zeros((0, 0)), False
    try:
        L = np.linalg.cholesky(A)
        if np.min(np.abs(np.diag(L))) <= 1e-14 * math.sqrt(max(np.trace(A), 1e-300)):
            raise np.linalg.LinAlgError
        Ainv = np.linalg.inv(A)
        return np.linalg.solve(A, b), Ainv, False
    except np.linalg.LinAlgError:
        jitter = 1e-12 * max(np.trace(A), 1e-300)
        Aj = A + jitter * np.eye(d)
        Ainv = np.linalg.inv(Aj)
        return np.linalg.solve(Aj, b), Ainv, True


def fit_ols(X, y, feature_names: Sequence[str] | None = None) -> LinearFit:
    """Least squares with intercept via the (centered) normal equations.

    Standard errors come from ``sigma^2 (X^T X)^{-1}`` with
    ``sigma^2 = RSS / (n - d - 1)``.
    """
    X, y, names = _prepare(X, y, feature_names)
    n, d = X.shape
    if n <= d + 1:
        raise UnderdeterminedError(f"OLS needs n > d + 1 rows (n={n}, d={d})")
    xm, ym = X.mean(axis=0), y.mean()
    Xc, yc = X - xm, y - ym
    beta, Ainv, singular = _solve_spd(Xc.T @ Xc, Xc.T @ yc)
    intercept = float(ym - xm @ beta)
    resid = y - X @ beta - intercept
    sigma2 = float(resid @ resid / (n - d - 1))
    se = np.sqrt(np.clip(np.diag(Ainv) * sigma2, 0.0, None))
    return LinearFit(beta, intercept, sigma2, names, se, "ols", {}, singular=singular)


def fit_ridge(X, y, alpha: float = 1.0, feature_names: Sequence[str] | None = None) -> LinearFit:
    """Closed-form ridge, ``(X^T X + alpha I)^{-1} X^T y`` on centered data."""
    if alpha < 0:
        raise ParameterError("alpha must be non-negative")
    X, y, names = _prepare(X, y, feature_names)
    n, d = X.shape
    xm, ym = X.mean(axis=0), y.mean()
    Xc, yc = X - xm, y - ym
    A = Xc.T @ Xc + alpha * np.eye(d)
    beta, Ainv, singular = _solve_spd(A, Xc.T @ yc)
    intercept = float(ym - xm @ beta)
    resid = y - X @ beta - intercept
    dof = max(n - d - 1, 1)
    sigma2 = float(resid @ resid / dof)
    # sandwich form for the penalized estimator
    cov = sigma2 * Ainv @ (Xc.T @ Xc) @ Ainv
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return LinearFit(beta, intercept, sigma2, names, se, "ridge", {"alpha": alpha}, singular=singular)


def soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lasso_objective(X, y, weights, intercept, alpha) -> float:
    r = np.asarray(y, float) - np.asarray(X, float) @ weights - intercept
    return float(r @ r / (2 * len(r)) + alpha * np.abs(weights).sum())


def fit_lasso(
    X,
    y,
    alpha: float = 1.0,
    feature_names: Sequence[str] | None = None,
    tol: float = 1e-8,
    max_sweeps: int = 10_000,
) -> LinearFit:
    """Lasso by cyclic coordinate descent on standardized features.

    Minimizes ``||y - Z b||^2 / 2n + alpha ||b||_1`` where ``Z`` holds the
    centered columns divided by their population standard deviation; the
    solution is mapped back to the raw feature scale.  All weights are zero
    once ``alpha >= max_j |Z_j^T (y - mean(y))| / n``.

    ``trace`` on the returned fit records the objective after every sweep.
    """
    if alpha < 0:
        raise ParameterError("alpha must be non-negative")
    X, y, names = _prepare(X, y, feature_names)
    n, d = X.shape
    xm, ym = X.mean(axis=0), y.mean()
    Z, sd, usable = _standardize(X)
    yc = y - ym
    # at or above the kill threshold the all-zero start is already optimal
    kill = alpha >= _alpha_max(Z, yc)
    b = np.zeros(d)
    r = yc.copy()
    colsq = (Z**2).sum(axis=0) / n  # 1 for usable columns

    def objective():
        return float(r @ r / (2 * n) + alpha * np.abs(b).sum())

    trace = [objective()]
    converged = kill
    sweeps = 0
    for sweeps in range(1, 0 if kill else max_sweeps + 1):
        max_delta = 0.0
        for j in range(d):
            if not usable[j]:
                continue
            old = b[j]
            rho = Z[:, j] @ r / n + colsq[j] * old
            new = soft_threshold(rho, alpha) / colsq[j]
            if new != old:
                r -= Z[:, j] * (new - old)
                b[j] = new
                max_delta = max(max_delta, abs(new - old))
        trace.append(objective())
        if max_delta < tol:
            converged = True
            break

    weights = np.where(usable, b / np.where(usable, sd, 1.0), 0.0)
    intercept = float(ym - xm @ weights)
    resid = y - X @ weights - intercept
    active = int(np.count_nonzero(weights))
    sigma2 = float(resid @ resid / max(n - active - 1, 1))
    return LinearFit(
        weights,
        intercept,
        sigma2,
        names,
        None,
        "lasso",
        {"alpha": alpha},
        n_iter=sweeps,
        converged=converged,
        trace=tuple(trace),
    )


def _standardize(X: np.ndarray):
    sd = X.std(axis=0)
    usable = sd > 0
    Z = np.zeros_like(X)
    Z[:, usable] = (X[:, usable] - X[:, usable].mean(axis=0)) / sd[usable]
    return Z, sd, usable


def _alpha_max(Z: np.ndarray, yc: np.ndarray) -> float:
    return float(np.max(np.abs(Z.T @ yc), initial=0.0)) / len(yc)


def lasso_alpha_max(X, y) -> float:
    """Smallest alpha for which :func:`fit_lasso` returns all-zero weights."""
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    return _alpha_max(_standardize(X)[0], y - y.mean())


# --- Huber -------------------------------------------------------------------


def _huber(z: np.ndarray, eps: float) -> np.ndarray:
    a = np.abs(z)
    return np.where(a <= eps, z * z, 2 * eps * a - eps * eps)


def huber_objective(r: np.ndarray, sigma: float, eps: float, weights: np.ndarray, alpha: float) -> float:
    """Joint objective ``sum(sigma + H(r/sigma) sigma) + alpha ||w||^2``."""
    n = len(r)
    return float(n * sigma + (sigma * _huber(r / sigma, eps)).sum() + alpha * weights @ weights)


def _huber_scale(r: np.ndarray, eps: float, lo: float) -> float:
    """Exact minimizer over sigma of the joint objective for fixed residuals.

    The objective is convex in sigma; its derivative
    ``n - eps^2 #{|r| > eps sigma} - sum_{|r| <= eps sigma} r^2 / sigma^2``
    is non-decreasing, so bisection on its sign is exact up to rounding.
    """
    n = len(r)
    a = np.abs(r)

    def deriv(s):
        inside = a <= eps * s
        return n - eps * eps * np.count_nonzero(~inside) - (a[inside] ** 2).sum() / (s * s)

    if deriv(lo) >= 0:
        return lo
    hi = max(a.max() / eps, lo) * 2 + lo
    while deriv(hi) < 0:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if deriv(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


def fit_huber(
    X,
    y,
    epsilon: float = 1.35,
    alpha: float = 1e-4,
    feature_names: Sequence[str] | None = None,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> LinearFit:
    """Huber regression with concomitant scale, by alternating IRLS.

    Each iteration takes one reweighted least-squares step for the
    coefficients (a majorize-minimize step, so the joint objective cannot
    increase) and then minimizes the objective exactly over the scale.
    ``trace`` records the joint objective per iteration; ``residual_variance``
    holds the squared final scale.
    """
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    if alpha < 0:
        raise ParameterError("alpha must be non-negative")
    X, y, names = _prepare(X, y, feature_names)
    n, d = X.shape
    Z = np.column_stack([np.ones(n), X])
    pen = np.eye(d + 1)
    pen[0, 0] = 0.0

    # start from the ridge solution
    A0 = Z.T @ Z + alpha * pen
    coef, _, _ = _solve_spd(A0, Z.T @ y)
    r = y - Z @ coef
    scale_floor = 1e-12 * (1.0 + float(np.std(y)))
    sigma = _huber_scale(r, epsilon, scale_floor)
    trace = [huber_objective(r, sigma, epsilon, coef[1:], alpha)]
    best = (trace[0], coef.copy(), sigma)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        a = np.abs(r)
        w = np.where(a <= epsilon * sigma, 1.0, epsilon * sigma / np.maximum(a, 1e-300))
        A = Z.T @ (Z * w[:, None]) + alpha * sigma * pen
        new, _, _ = _solve_spd(A, Z.T @ (w * y))
        delta = float(np.max(np.abs(new - coef)))
        coef = new
        r = y - Z @ coef
        sigma = _huber_scale(r, epsilon, scale_floor)
        obj = huber_objective(r, sigma, epsilon, coef[1:], alpha)
        trace.append(obj)
        if obj <= best[0]:
            best = (obj, coef.copy(), sigma)
        if delta < tol:
            converged = True
            break
    if not converged:
        _, coef, sigma = best
    return LinearFit(
        coef[1:].copy(),
        float(coef[0]),
        float(sigma**2),
        names,
        None,
        "huber",
        {"epsilon": epsilon, "alpha": alpha},
        n_iter=it,
        converged=converged,
        trace=tuple(trace),
    )


# --- Tweedie GLM ---------------------------------------------------------------


def tweedie_deviance(y: np.ndarray, mu: np.ndarray, power: float) -> float:
    """Total unit deviance of a Tweedie family with variance ``mu**power``."""
    y = np.asarray(y, float)
    mu = np.asarray(mu, float)
    p = power
    if p == 0:
        dev = (y - mu) ** 2
    elif p == 1:
        ylogy = np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0) / mu), 0.0)
        dev = 2 * (ylogy - (y - mu))
    elif p == 2:
        dev = 2 * (np.log(mu / y) + y / mu - 1)
    else:
        dev = 2 * (
            np.power(y, 2 - p) / ((1 - p) * (2 - p))
            - y * np.power(mu, 1 - p) / (1 - p)
            + np.power(mu, 2 - p) / (2 - p)
        )
    return float(dev.sum())


def fit_tweedie(
    X,
    y,
    spec: GlmSpec = GlmSpec(),
    alpha: float = 0.0,
    feature_names: Sequence[str] | None = None,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> LinearFit:
    """Tweedie GLM by iteratively reweighted least squares (Fisher scoring).

    Minimizes ``deviance / 2n + alpha/2 ||w||^2``.  Working weights are
    ``(dmu/deta)^2 / mu^power``.  Step halving guards against an increase of
    the penalized deviance.  The dispersion estimate
    ``deviance / (n - d - 1)`` is stored in ``residual_variance``.
    """
    if alpha < 0:
        raise ParameterError("alpha must be non-negative")
    X, y, names = _prepare(X, y, feature_names)
    n, d = X.shape
    p = spec.power
    if p >= 1 and np.any(y < 0):
        raise DomainError(f"Tweedie power {p} requires non-negative responses")
    if p == 2 and np.any(y <= 0):
        raise DomainError("Tweedie power 2 (gamma) requires strictly positive responses")
    log_link = spec.link == "log"
    if log_link and y.mean() <= 0:
        raise DomainError("log link needs a positive mean response")

    Z = np.column_stack([np.ones(n), X])
    pen = np.eye(d + 1)
    pen[0, 0] = 0.0
    coef = np.zeros(d + 1)
    coef[0] = math.log(y.mean()) if log_link else y.mean()

    def mean_of(c):
        eta = Z @ c
        return np.exp(eta) if log_link else eta

    def objective(c):
        return tweedie_deviance(y, mean_of(c), p) / (2 * n) + 0.5 * alpha * c[1:] @ c[1:]

    obj = objective(coef)
    trace = [obj]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = Z @ coef
        mu = np.exp(eta) if log_link else eta
        if log_link:
            w = np.power(mu, 2 - p)
            zwork = eta + (y - mu) / mu
        else:
            w = np.ones(n)
            zwork = y
        A = Z.T @ (Z * w[:, None]) / n + alpha * pen
        target, _, _ = _solve_spd(A, Z.T @ (w * zwork) / n)
        step = 1.0
        cand = target
        new_obj = objective(cand)
        while not (np.isfinite(new_obj) and new_obj <= obj * (1 + 1e-15) + 1e-300) and step > 1e-10:
            step /= 2
            cand = coef + step * (target - coef)
            new_obj = objective(cand)
        rel = abs(obj - new_obj) / max(abs(obj), 1e-300)
        coef, obj = cand, new_obj
        trace.append(obj)
        if rel < tol:
            converged = True
            break

    mu = mean_of(coef)
    dev = tweedie_deviance(y, mu, p)
    phi = dev / max(n - d - 1, 1)
    w = np.power(mu, 2 - p) if log_link else np.ones(n)
    _, Ainv, singular = _solve_spd(Z.T @ (Z * w[:, None]) + n * alpha * pen, np.zeros(d + 1))
    se = np.sqrt(np.clip(np.diag(Ainv)[1:] * phi, 0.0, None))
    return LinearFit(
        coef[1:].copy(),
        float(coef[0]),
        float(phi),
        names,
        se,
        "tweedie",
        {"alpha": alpha, **spec.to_dict()},
        n_iter=it,
        converged=converged,
        singular=singular,
        trace=tuple(trace),
    )
