"""Single sigmoid unit trained on the mean squared error.

Weights are arrays ``w = (w0, w1, ..., wn)`` where ``w0`` is the bias.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from .dataset import LabeledDataset
from .errors import DataError

__all__ = [
    "TrainConfig",
    "TrainTrace",
    "init_weights",
    "sigmoid",
    "pre_activation",
    "activation",
    "classify",
    "mse_loss",
    "accuracy",
    "sample_gradient",
    "sgd_step",
    "train",
]


def sigmoid(z):
    return expit(z)


def init_weights(n: int, seed: int) -> np.ndarray:
    """Uniform draw in [-1, 1]^(n+1)."""
    return np.random.default_rng(seed).uniform(-1.0, 1.0, n + 1)


def _check(w, X: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if X.shape[-1] + 1 != w.shape[0]:
        raise DataError(f"weights of length {w.shape[0]} do not fit points of dimension {X.shape[-1]}")
    return w


def _points(x) -> np.ndarray:
    if isinstance(x, LabeledDataset):
        return x.points
    return np.asarray(x, dtype=np.float64)


def pre_activation(w, x):
    """``w0 + w1 x1 + ... + wn xn`` for one point or each row of a 2-D array."""
    X = _points(x)
    w = _check(w, X)
    return w[0] + X @ w[1:]


def activation(w, x):
    return sigmoid(pre_activation(w, x))


def classify(w, x):
    """1 where the activation is at least one half, else 0."""
    y = activation(w, x)
    return (y >= 0.5).astype(np.int64) if np.ndim(y) else int(y >= 0.5)


def _binary_labels(dataset: LabeledDataset) -> np.ndarray:
    if len(dataset) == 0:
        raise DataError("dataset is empty")
    labels = dataset.labels
    if labels.max() > 1:
        raise DataError(f"binary labels required, found label {int(labels.max())}")
    return labels


def mse_loss(w, dataset: LabeledDataset) -> float:
    """Mean of ``(c - y)^2`` over the dataset."""
    c = _binary_labels(dataset)
    return float(np.mean((c - activation(w, dataset.points)) ** 2))


def accuracy(w, dataset: LabeledDataset) -> float:
    c = _binary_labels(dataset)
    return float(np.mean(classify(w, dataset.points) == c))


def sample_gradient(w, x, c) -> np.ndarray:
    """Gradient of ``(c - y)^2 / 2`` with respect to ``w`` at one point."""
    x = np.asarray(x, dtype=np.float64)
    y = float(activation(w, x))
    return -(c - y) * y * (1.0 - y) * np.concatenate(([1.0], x))


def sgd_step(w, x, c, eta: float) -> np.ndarray:
    """One descent step on a single sample: ``w + eta (c - y) y (1 - y) (1, x)``."""
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = float(activation(w, x))
    return w + eta * (c - y) * y * (1.0 - y) * np.concatenate(([1.0], x))


@dataclass(frozen=True)
class TrainConfig:
    """Trainer settings.

    ``schedule`` is ``"constant"`` (rate ``eta0``) or ``"harmonic"``
    (``eta0 / (1 + i)`` at update ``i``). In ``sgd`` mode an epoch is
    ``len(dataset)`` single-sample updates drawn with replacement; in ``gd``
    mode it is one full-batch update.
    """

    mode: str = "sgd"
    epochs: int = 100
    schedule: str = "constant"
    eta0: float = 0.1
    seed: int = 0
    record_history: bool = True

    def __post_init__(self):
        if self.mode not in ("sgd", "gd"):
            raise ValueError(f"mode must be 'sgd' or 'gd', got {self.mode!r}")
        if self.schedule not in ("constant", "harmonic"):
            raise ValueError(f"schedule must be 'constant' or 'harmonic', got {self.schedule!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.eta0 > 0:
            raise ValueError("eta0 must be positive")

    def learning_rate(self, i: int) -> float:
        if self.schedule == "constant":
            return self.eta0
        return self.eta0 / (1.0 + i)


@dataclass
class TrainTrace:
    """Per-epoch losses and accuracies; reference columns are None without a reference set."""

    weights: np.ndarray
    train_loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    ref_loss: Optional[list] = None
    ref_acc: Optional[list] = None

    def rows(self):
        for e in range(len(self.train_loss)):
            yield {
                "epoch": e + 1,
                "train_loss": self.train_loss[e],
                "ref_loss": None if self.ref_loss is None else self.ref_loss[e],
                "train_acc": self.train_acc[e],
                "ref_acc": None if self.ref_acc is None else self.ref_acc[e],
            }

    def to_csv(self, path) -> None:
        columns = ["epoch", "train_loss", "ref_loss", "train_acc", "ref_acc"]
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in self.rows():
                writer.writerow(["" if row[k] is None else (row[k] if k == "epoch" else format(row[k], ".17g")) for k in columns])


def _sgd_epoch(w: list, X: np.ndarray, c: np.ndarray, draws: np.ndarray, config: TrainConfig, start: int) -> int:
    # plain-float inner loop; numpy per-sample overhead dominates otherwise
    n = len(w)
    rows = X.tolist()
    labels = c.tolist()
    i = start
    for k in draws.tolist():
        x = rows[k]
        z = w[0]
        for j in range(1, n):
            z += w[j] * x[j - 1]
        y = 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))
        step = config.learning_rate(i) * (labels[k] - y) * y * (1.0 - y)
        w[0] += step
        for j in range(1, n):
            w[j] += step * x[j - 1]
        i += 1
    return i


def train(
    dataset: LabeledDataset,
    w0,
    config: TrainConfig,
    reference: Optional[LabeledDataset] = None,
) -> TrainTrace:
    """Train from ``w0``; the input weights are not modified."""
    c = _binary_labels(dataset)
    if reference is not None:
        _binary_labels(reference)
    X = dataset.points
    w = _check(w0, X).copy()
    rng = np.random.default_rng(config.seed)
    trace = TrainTrace(weights=w)
    if reference is not None and config.record_history:
        trace.ref_loss, trace.ref_acc = [], []

    Xa = np.column_stack((np.ones(len(dataset)), X))
    i = 0
    for _ in range(config.epochs):
        if config.mode == "sgd":
            draws = rng.integers(0, len(dataset), size=len(dataset))
            wl = w.tolist()
            i = _sgd_epoch(wl, X, c, draws, config, i)
            w = np.array(wl)
        else:
            y = expit(Xa @ w)
            w = w + config.learning_rate(i) * (((c - y) * y * (1.0 - y)) @ Xa) / len(dataset)
            i += 1
        if config.record_history:
            trace.train_loss.append(mse_loss(w, dataset))
            trace.train_acc.append(accuracy(w, dataset))
            if reference is not None:
                trace.ref_loss.append(mse_loss(w, reference))
                trace.ref_acc.append(accuracy(w, reference))
    trace.weights = w
    return trace
