"""Uniform prediction interface over the linear family, trees and MLPs.

Explainers only ever call :meth:`FittedModel.predict`, so anything with that
method can be explained.  Classifiers return an ``(n, n_classes)``
probability matrix; regressors return a length-``n`` vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import DataError, UsageError
from . import mlp as _mlp
from .linear import GlmSpec, LinearFit
from .tree import Task, TreeNode, build_tree, predict_tree


class FittedModel:
    kind: str = ""
    feature_names: tuple[str, ...] = ()
    classes: tuple | None = None

    @property
    def is_classifier(self) -> bool:
        return self.classes is not None

    def predict(self, X: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def predict_class(self, X: np.ndarray) -> np.ndarray:
        if not self.is_classifier:
            raise UsageError(f"{self.kind} model is not a classifier")
        return np.asarray(self.predict(X)).argmax(axis=1)

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != len(self.feature_names):
            raise DataError(
                f"{self.kind} model expects {len(self.feature_names)} features, got {X.shape[1]}"
            )
        return X


@dataclass(frozen=True)
class LinearModel(FittedModel):
    fit: LinearFit
    glm: GlmSpec | None = None

    @property
    def kind(self) -> str:  # type: ignore[override]
        return self.fit.method

    @property
    def feature_names(self) -> tuple[str, ...]:  # type: ignore[override]
        return self.fit.feature_names

    def predict(self, X):
        eta = self.fit.linear_predictor(self._check(X))
        if self.glm is not None and self.glm.link == "log":
            return np.exp(eta)
        return eta

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.fit.params),
            "feature_names": list(self.feature_names),
            "weights": self.fit.to_dict(),
            "glm": None if self.glm is None else self.glm.to_dict(),
        }


@dataclass(frozen=True)
class TreeModel(FittedModel):
    root: TreeNode
    task: Task
    feature_names: tuple[str, ...]
    classes: tuple | None = None
    params: dict = field(default_factory=dict)
    kind: str = "tree"

    def predict(self, X):
        n_classes = 0 if self.classes is None else len(self.classes)
        return predict_tree(self.root, self._check(X), self.task, n_classes)

    def to_dict(self) -> dict:
        return {
            "kind": "tree",
            "params": dict(self.params, task=self.task),
            "feature_names": list(self.feature_names),
            "classes": None if self.classes is None else list(self.classes),
            "tree": self.root.to_dict(),
        }


@dataclass(frozen=True)
class MlpModel(FittedModel):
    params: list
    spec: _mlp.MlpSpec
    feature_names: tuple[str, ...]
    classes: tuple | None = None
    target_mean: float = 0.0
    target_scale: float = 1.0
    report: _mlp.TrainReport | None = None
    kind: str = "mlp"

    def predict(self, X):
        out, _ = _mlp.forward(self.params, self._check(X), self.spec.output)
        if self.spec.output == "softmax":
            return out
        out = out * self.target_scale + self.target_mean
        return out[:, 0] if out.shape[1] == 1 else out

    def to_dict(self) -> dict:
        return {
            "kind": "mlp",
            "params": self.spec.to_dict(),
            "feature_names": list(self.feature_names),
            "classes": None if self.classes is None else list(self.classes),
            "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.params],
            "target_mean": self.target_mean,
            "target_scale": self.target_scale,
            "train_report": None if self.report is None else self.report.to_dict(),
        }


def model_from_dict(d: dict) -> FittedModel:
    """Inverse of ``to_dict`` for every model kind."""
    kind = d["kind"]
    if kind == "tree":
        params = dict(d["params"])
        task = params.pop("task")
        classes = d.get("classes")
        return TreeModel(
            TreeNode.from_dict(d["tree"]),
            task,
            tuple(d["feature_names"]),
            None if classes is None else tuple(classes),
            params,
        )
    if kind == "mlp":
        classes = d.get("classes")
        rep = d.get("train_report")
        return MlpModel(
            [(np.asarray(L["W"], float), np.asarray(L["b"], float)) for L in d["layers"]],
            _mlp.MlpSpec.from_dict(d["params"]),
            tuple(d["feature_names"]),
            None if classes is None else tuple(classes),
            float(d["target_mean"]),
            float(d["target_scale"]),
            None if rep is None else _mlp.TrainReport(**rep),
        )
    fit = LinearFit.from_dict(d["weights"])
    glm = d.get("glm")
    return LinearModel(fit, None if glm is None else GlmSpec(**glm))


# --- fitting entry points ----------------------------------------------------


def _names(X, feature_names):
    return tuple(feature_names) if feature_names is not None else tuple(
        f"x{j}" for j in range(np.asarray(X).shape[1])
    )


def fit_tree(
    X,
    y,
    task: Task = "regression",
    max_depth: int = 5,
    min_leaf: int = 1,
    feature_names: Sequence[str] | None = None,
) -> TreeModel:
    """Greedy CART tree.

    For classification ``y`` holds class indices ``0..K-1`` (or labels,
    which are mapped through their sorted unique values).
    """
    if max_depth < 1 or min_leaf < 1:
        raise UsageError("max_depth and min_leaf must be >= 1")
    X = np.asarray(X, dtype=float)
    names = _names(X, feature_names)
    params = {"max_depth": max_depth, "min_leaf": min_leaf}
    if task == "regression":
        y = np.asarray(y, dtype=float)
        root = build_tree(X, y, task, max_depth, min_leaf)
        return TreeModel(root, task, names, None, params)
    if task != "classification":
        raise UsageError(f"unknown tree task {task!r}")
    classes, codes = np.unique(np.asarray(y), return_inverse=True)
    onehot = np.eye(len(classes))[codes]
    root = build_tree(X, onehot, task, max_depth, min_leaf, len(classes))
    return TreeModel(root, task, names, tuple(c.item() for c in classes), params)


def mlp_train(
    X,
    y,
    spec: _mlp.MlpSpec,
    validation: tuple[np.ndarray, np.ndarray] | None = None,
    feature_names: Sequence[str] | None = None,
    classes: Sequence | None = None,
) -> MlpModel:
    """Train an MLP and return the model with its ``report`` attached.

    For softmax output ``y`` must be integer class indices; ``classes``
    optionally names them (defaults to ``0..K-1``).  For identity output
    the target is standardized internally and predictions are mapped back.
    """
    X = np.asarray(X, dtype=float)
    names = _names(X, feature_names)
    if spec.output == "softmax":
        y = np.asarray(y, dtype=int)
        k = spec.layer_sizes[-1]
        if y.min() < 0 or y.max() >= k:
            raise DataError(f"class indices must lie in [0, {k})")
        val = None if validation is None else (np.asarray(validation[0], float), np.asarray(validation[1], int))
        params, report = _mlp.train(X, y, spec, val)
        cls = tuple(classes) if classes is not None else tuple(range(k))
        return MlpModel(params, spec, names, cls, report=report)
    y = np.asarray(y, dtype=float)
    y2 = y[:, None] if y.ndim == 1 else y
    mean = float(y2.mean())
    scale = float(y2.std()) or 1.0
    val = None
    if validation is not None:
        vy = np.asarray(validation[1], float)
        vy = vy[:, None] if vy.ndim == 1 else vy
        val = (np.asarray(validation[0], float), (vy - mean) / scale)
    params, report = _mlp.train(X, (y2 - mean) / scale, spec, val)
    return MlpModel(params, spec, names, None, mean, scale, report)
