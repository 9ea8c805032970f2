"""CART-style binary trees for regression (variance reduction) and
classification (Gini decrease).

Split search is exhaustive over features and midpoints between adjacent
distinct sorted values.  Ties go to the lowest feature index, then the
lowest threshold, which makes the fitted tree a deterministic function of
the data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

Task = Literal["regression", "classification"]

# relative slack when comparing split gains, so ties in exact arithmetic
# are treated as ties despite rounding
_GAIN_RTOL = 1e-12


@dataclass
class TreeNode:
    depth: int
    n_samples: int
    value: float | None = None  # leaf prediction (regression)
    distribution: list[float] | None = None  # leaf class probabilities
    feature: int | None = None
    threshold: float | None = None
    left: TreeNode | None = None
    right: TreeNode | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            d = {"depth": self.depth, "n_samples": self.n_samples}
            if self.value is not None:
                d["value"] = self.value
            if self.distribution is not None:
                d["distribution"] = list(self.distribution)
            return d
        return {
            "depth": self.depth,
            "n_samples": self.n_samples,
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> TreeNode:
        if "feature" not in d:
            return cls(
                depth=d["depth"],
                n_samples=d["n_samples"],
                value=d.get("value"),
                distribution=d.get("distribution"),
            )
        return cls(
            depth=d["depth"],
            n_samples=d["n_samples"],
            feature=d["feature"],
            threshold=d["threshold"],
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


def _best_split(X: np.ndarray, Y: np.ndarray, task: Task, min_leaf: int):
    """Return ``(gain, feature, threshold)`` of the best admissible split.

    ``Y`` is the response column (regression) or a one-hot matrix
    (classification).  Gain is the decrease of total impurity
    (SSE, or n * Gini) from parent to children.
    """
    n, d = X.shape
    if task == "regression":
        total = Y.sum()
        parent = ((Y - total / n) ** 2).sum()
    else:
        counts = Y.sum(axis=0)
        parent = n - (counts**2).sum() / n

    best = None
    scale = max(abs(parent), 1e-300)
    for j in range(d):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        # candidate positions: left gets the first i samples
        i = np.arange(min_leaf, n - min_leaf + 1)
        if i.size == 0:
            continue
        distinct = xs[i - 1] < xs[np.minimum(i, n - 1)]
        i = i[distinct & (i < n)]
        if i.size == 0:
            continue
        if task == "regression":
            ys = Y[order] - total / n
            cs = np.cumsum(ys)
            cs2 = np.cumsum(ys**2)
            left_sum, left_sq = cs[i - 1], cs2[i - 1]
            right_sum, right_sq = cs[-1] - left_sum, cs2[-1] - left_sq
            nl, nr = i, n - i
            child = (left_sq - left_sum**2 / nl) + (right_sq - right_sum**2 / nr)
        else:
            cc = np.cumsum(Y[order], axis=0)
            left = cc[i - 1]
            right = cc[-1] - left
            nl, nr = i, n - i
            child = (nl - (left**2).sum(axis=1) / nl) + (nr - (right**2).sum(axis=1) / nr)
        gains = parent - child
        k = int(np.argmax(gains))
        # argmax already returns the first (lowest threshold) maximizer;
        # pull in near-ties that rounding split apart
        top = gains[k]
        k = int(np.flatnonzero(gains >= top - _GAIN_RTOL * scale)[0])
        gain = float(gains[k])
        thr = float((xs[i[k] - 1] + xs[i[k]]) / 2)
        if best is None or gain > best[0] + _GAIN_RTOL * scale:
            best = (gain, j, thr)
    return best, parent


def _leaf(depth, Y, task, n_classes) -> TreeNode:
    n = len(Y)
    if task == "regression":
        # shift by the first value so a constant target is reproduced exactly
        return TreeNode(depth, n, value=float(Y[0] + (Y - Y[0]).mean()))
    counts = Y.sum(axis=0)
    return TreeNode(depth, n, distribution=(counts / n).tolist())


def build_tree(X, Y, task: Task, max_depth: int, min_leaf: int, n_classes: int = 0, depth: int = 0) -> TreeNode:
    n = len(X)
    best, parent = (None, 0.0)
    if depth < max_depth and n >= 2 * min_leaf:
        best, parent = _best_split(X, Y, task, min_leaf)
    # split while impure, even at zero gain (XOR-type structure needs it)
    impurity_scale = float((Y**2).sum()) if task == "regression" else float(n)
    impure = parent > _GAIN_RTOL * max(impurity_scale, 1e-300)
    if best is None or not impure or best[0] < -_GAIN_RTOL * max(abs(parent), 1.0):
        return _leaf(depth, Y, task, n_classes)
    _, j, thr = best
    mask = X[:, j] <= thr
    node = TreeNode(depth, n, feature=j, threshold=thr)
    node.left = build_tree(X[mask], Y[mask], task, max_depth, min_leaf, n_classes, depth + 1)
    node.right = build_tree(X[~mask], Y[~mask], task, max_depth, min_leaf, n_classes, depth + 1)
    return node


def tree_depth(node: TreeNode) -> int:
    if node.is_leaf:
        return node.depth
    return max(tree_depth(node.left), tree_depth(node.right))


def count_leaves(node: TreeNode) -> int:
    if node.is_leaf:
        return 1
    return count_leaves(node.left) + count_leaves(node.right)


def predict_tree(node: TreeNode, X: np.ndarray, task: Task, n_classes: int = 0) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    n = len(X)
    out = np.zeros((n, n_classes)) if task == "classification" else np.zeros(n)
    stack = [(node, np.arange(n))]
    while stack:
        nd, idx = stack.pop()
        if idx.size == 0:
            continue
        if nd.is_leaf:
            if task == "classification":
                out[idx] = nd.distribution
            else:
                out[idx] = nd.value
            continue
        go_left = X[idx, nd.feature] <= nd.threshold
        stack.append((nd.left, idx[go_left]))
        stack.append((nd.right, idx[~go_left]))
    return out
