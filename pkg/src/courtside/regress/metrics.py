"""Scoring metrics and standardized coefficients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import UndefinedMetricError
from .linear import LinearFit


def r2_score(y, yhat) -> float:
    """Coefficient of determination ``1 - SS_res / SS_tot`` (can be negative)."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape or y.size < 2:
        raise ValueError("r2_score needs two equal-length vectors of length >= 2")
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise UndefinedMetricError("R^2 is undefined for a constant target")
    return 1.0 - float(((y - yhat) ** 2).sum()) / ss_tot


def accuracy(y, yhat) -> float:
    y = np.asarray(y).ravel()
    yhat = np.asarray(yhat).ravel()
    if y.shape != yhat.shape or y.size < 1:
        raise ValueError("accuracy needs two equal-length non-empty vectors")
    return float((y == yhat).mean())


@dataclass
class Attribution:
    """Per-feature explanation values with method tag and provenance."""

    feature_names: list[str]
    values: np.ndarray
    method: str
    baseline: float | None = None
    uncertainty: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.feature_names) != self.values.shape[0]:
            raise ValueError("one value per feature is required")

    def to_dict(self) -> dict:
        d = {
            "method": self.method,
            "feature_names": list(self.feature_names),
            "values": self.values.tolist(),
        }
        if self.baseline is not None:
            d["baseline"] = self.baseline
        if self.uncertainty is not None:
            d["uncertainty"] = np.asarray(self.uncertainty).tolist()
        if self.lower is not None:
            d["lower"] = np.asarray(self.lower).tolist()
            d["upper"] = np.asarray(self.upper).tolist()
        if self.meta:
            d["meta"] = dict(self.meta)
        return d


def standardized_coefficients(fit: LinearFit, X, y) -> Attribution:
    """Weights rescaled by ``std(x_j) / std(y)`` with 95% intervals.

    Intervals are ``(w_j +/- 1.96 se_j)`` under the same rescaling; they are
    omitted when the fit carries no standard errors.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    sy = float(y.std())
    if sy == 0.0:
        raise UndefinedMetricError("standardized coefficients undefined for constant y")
    factor = X.std(axis=0) / sy
    values = fit.weights * factor
    lower = upper = None
    if fit.weight_stderr is not None:
        half = 1.96 * fit.weight_stderr * factor
        lower, upper = values - half, values + half
    return Attribution(
        list(fit.feature_names),
        values,
        "standardized_coefficients",
        lower=lower,
        upper=upper,
        meta={"fit": fit.method},
    )
