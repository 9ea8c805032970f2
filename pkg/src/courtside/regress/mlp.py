"""A small fully connected network trained with plain mini-batch SGD.

Hidden layers use ReLU followed by (inverted) dropout; the output layer is
either softmax with cross-entropy or identity with mean squared error.
Initialization is He-uniform: ``W ~ U(-sqrt(6/fan_in), sqrt(6/fan_in))``,
biases zero, drawn layer by layer from ``numpy.random.default_rng(seed)``.
The same generator then drives validation hold-out, epoch shuffling and
dropout masks, in that order, so a seed fixes the whole run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ..errors import DivergenceError, ParameterError

Params = list[tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class MlpSpec:
    """Network shape and training schedule.

    ``layer_sizes`` runs from input width to output width, e.g.
    ``(46, 40, 30, 5)``.  ``dropout_rates`` has one entry per hidden layer.
    """

    layer_sizes: tuple[int, ...]
    dropout_rates: tuple[float, ...] = ()
    output: Literal["softmax", "identity"] = "softmax"
    seed: int = 0
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.05
    validation_fraction: float = 0.0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ParameterError("layer_sizes needs >= 2 entries, all >= 1")
        rates = tuple(float(r) for r in self.dropout_rates) or (0.0,) * (len(sizes) - 2)
        object.__setattr__(self, "dropout_rates", rates)
        if len(rates) != len(sizes) - 2:
            raise ParameterError("one dropout rate per hidden layer is required")
        if any(not 0.0 <= r < 1.0 for r in rates):
            raise ParameterError("dropout rates must lie in [0, 1)")
        if self.output not in ("softmax", "identity"):
            raise ParameterError(f"unknown output {self.output!r}")
        if self.epochs < 1 or self.batch_size < 1 or not self.learning_rate > 0:
            raise ParameterError("epochs, batch_size and learning_rate must be positive")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ParameterError("validation_fraction must lie in [0, 1)")

    @property
    def hidden_activations(self) -> tuple[str, ...]:
        return ("relu",) * (len(self.layer_sizes) - 2)

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "activations": list(self.hidden_activations),
            "dropout_rates": list(self.dropout_rates),
            "output": self.output,
            "seed": self.seed,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "validation_fraction": self.validation_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> MlpSpec:
        return cls(
            layer_sizes=tuple(d["layer_sizes"]),
            dropout_rates=tuple(d.get("dropout_rates", ())),
            output=d.get("output", "softmax"),
            seed=int(d.get("seed", 0)),
            epochs=int(d.get("epochs", 50)),
            batch_size=int(d.get("batch_size", 32)),
            learning_rate=float(d.get("learning_rate", 0.05)),
            validation_fraction=float(d.get("validation_fraction", 0.0)),
        )


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "train_loss": list(self.train_loss),
            "train_accuracy": list(self.train_accuracy),
            "val_loss": list(self.val_loss),
            "val_accuracy": list(self.val_accuracy),
        }


def init_params(sizes: tuple[int, ...], rng: np.random.Generator) -> Params:
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / fan_in)
        W = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        params.append((W, np.zeros(fan_out)))
    return params


def softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def forward(params: Params, X: np.ndarray, output: str, masks=None):
    """Return ``(outputs, cache)``.  ``masks`` are pre-scaled dropout masks."""
    A = X
    cache = [X]
    for li, (W, b) in enumerate(params[:-1]):
        H = A @ W + b
        A = np.maximum(H, 0.0)
        if masks is not None:
            A = A * masks[li]
        cache.append((H, A))
    W, b = params[-1]
    Z = A @ W + b
    out = softmax(Z) if output == "softmax" else Z
    return out, cache


def loss_and_grad(
    params: Params, X: np.ndarray, y: np.ndarray, output: str, masks=None
) -> tuple[float, Params]:
    """Mean loss over the batch and its gradient with respect to every tensor.

    ``y`` is class indices for softmax output and a ``(n, out)`` array for
    identity output.
    """
    n = X.shape[0]
    out, cache = forward(params, X, output, masks)
    if output == "softmax":
        p = out[np.arange(n), y]
        loss = float(-np.log(np.maximum(p, 1e-300)).mean())
        G = out.copy()
        G[np.arange(n), y] -= 1.0
        G /= n
    else:
        diff = out - y
        loss = float((diff**2).sum() / n)
        G = 2.0 * diff / n
    grads: Params = [None] * len(params)  # type: ignore[list-item]
    A_prev = cache[-1][1] if len(cache) > 1 else cache[0]
    W, _ = params[-1]
    grads[-1] = (A_prev.T @ G, G.sum(axis=0))
    dA = G @ W.T
    for li in range(len(params) - 2, -1, -1):
        H, _ = cache[li + 1]
        if masks is not None:
            dA = dA * masks[li]
        dH = dA * (H > 0)
        A_in = cache[li][1] if li > 0 else cache[0]
        Wl, _ = params[li]
        grads[li] = (A_in.T @ dH, dH.sum(axis=0))
        dA = dH @ Wl.T
    return loss, grads


def _dropout_masks(spec: MlpSpec, n: int, rng: np.random.Generator):
    masks = []
    for size, rate in zip(spec.layer_sizes[1:-1], spec.dropout_rates):
        if rate == 0.0:
            masks.append(np.ones((n, size)))
        else:
            keep = rng.random((n, size)) >= rate
            masks.append(keep / (1.0 - rate))
    return masks


def _metrics(params, X, y, spec) -> tuple[float, float]:
    out, _ = forward(params, X, spec.output)
    n = len(X)
    if spec.output == "softmax":
        loss = float(-np.log(np.maximum(out[np.arange(n), y], 1e-300)).mean())
        acc = float((out.argmax(axis=1) == y).mean())
    else:
        loss = float(((out - y) ** 2).sum() / n)
        acc = math.nan
    return loss, acc


def train(
    X: np.ndarray,
    y: np.ndarray,
    spec: MlpSpec,
    validation: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[Params, TrainReport]:
    """Run SGD and return trained parameters and the per-epoch report.

    Targets must already be in network space (class indices, or a
    standardized ``(n, out)`` array).
    """
    X = np.asarray(X, dtype=float)
    if X.shape[1] != spec.layer_sizes[0]:
        raise ParameterError(f"input width {X.shape[1]} != layer_sizes[0]={spec.layer_sizes[0]}")
    rng = np.random.default_rng(spec.seed)
    params = init_params(spec.layer_sizes, rng)
    if validation is None and spec.validation_fraction > 0:
        perm = rng.permutation(len(X))
        n_val = max(1, int(round(len(X) * spec.validation_fraction)))
        vi, ti = np.sort(perm[:n_val]), np.sort(perm[n_val:])
        validation = (X[vi], y[vi])
        X, y = X[ti], y[ti]
    report = TrainReport()
    n = len(X)
    # divergence shows up as inf/nan and is reported below, not warned about
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, spec.epochs + 1):
            order = rng.permutation(n)
            for start in range(0, n, spec.batch_size):
                idx = order[start : start + spec.batch_size]
                masks = _dropout_masks(spec, len(idx), rng)
                loss, grads = loss_and_grad(params, X[idx], y[idx], spec.output, masks)
                if not math.isfinite(loss):
                    raise DivergenceError(epoch, loss)
                params = [
                    (W - spec.learning_rate * gW, b - spec.learning_rate * gb)
                    for (W, b), (gW, gb) in zip(params, grads)
                ]
            tl, ta = _metrics(params, X, y, spec)
            if not math.isfinite(tl):
                raise DivergenceError(epoch, tl)
            report.train_loss.append(tl)
            if spec.output == "softmax":
                report.train_accuracy.append(ta)
            if validation is not None:
                vl, va = _metrics(params, validation[0], validation[1], spec)
                if not math.isfinite(vl):
                    raise DivergenceError(epoch, vl)
                report.val_loss.append(vl)
                if spec.output == "softmax":
                    report.val_accuracy.append(va)
    return params, report
