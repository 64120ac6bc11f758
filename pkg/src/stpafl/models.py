"""Small differentiable classifiers with analytic gradients.

Both model families operate on a single flat float64 parameter vector with a
fixed, documented packing order, so aggregation rules can treat client
submissions as plain vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset


@dataclass(frozen=True)
class TrainConfig:
    local_steps: int = 5
    local_lr: float = 0.01
    batch_size: int | None = None  # None = full batch

    def __post_init__(self):
        if self.local_steps < 1:
            raise ValueError("local_steps must be >= 1")
        if self.local_lr <= 0:
            raise ValueError("local_lr must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


class LinearSoftmaxModel:
    """Multinomial logistic regression. Packing order: W row-major, then b."""

    def __init__(self, n_features: int, n_classes: int):
        self.n_features = n_features
        self.n_classes = n_classes

    @property
    def dim(self) -> int:
        return self.n_classes * self.n_features + self.n_classes

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        bound = 1.0 / np.sqrt(self.n_features)
        return rng.uniform(-bound, bound, size=self.dim)

    def unpack(self, params: np.ndarray):
        cut = self.n_classes * self.n_features
        W = params[:cut].reshape(self.n_classes, self.n_features)
        b = params[cut:]
        return W, b

    def pack(self, W: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.concatenate([W.ravel(), b.ravel()])

    def logits(self, params: np.ndarray, X: np.ndarray) -> np.ndarray:
        W, b = self.unpack(params)
        return X @ W.T + b

    def gradient(self, params: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        P = _softmax(self.logits(params, X))
        P[np.arange(len(y)), y] -= 1.0
        P /= len(y)
        dW = P.T @ X
        db = P.sum(axis=0)
        return self.pack(dW, db)


class MlpModel:
    """One-hidden-layer tanh network. Packing order: w1, b1, w2, b2."""

    def __init__(self, n_features: int, hidden: int, n_classes: int):
        self.n_features = n_features
        self.hidden = hidden
        self.n_classes = n_classes

    @property
    def dim(self) -> int:
        return (
            self.hidden * self.n_features
            + self.hidden
            + self.n_classes * self.hidden
            + self.n_classes
        )

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        b1 = 1.0 / np.sqrt(self.n_features)
        b2 = 1.0 / np.sqrt(self.hidden)
        return np.concatenate(
            [
                rng.uniform(-b1, b1, size=self.hidden * self.n_features + self.hidden),
                rng.uniform(-b2, b2, size=self.n_classes * self.hidden + self.n_classes),
            ]
        )

    def unpack(self, params: np.ndarray):
        h, f, c = self.hidden, self.n_features, self.n_classes
        i = 0
        w1 = params[i : i + h * f].reshape(h, f)
        i += h * f
        b1 = params[i : i + h]
        i += h
        w2 = params[i : i + c * h].reshape(c, h)
        i += c * h
        b2 = params[i : i + c]
        return w1, b1, w2, b2

    def pack(self, w1, b1, w2, b2) -> np.ndarray:
        return np.concatenate([w1.ravel(), b1.ravel(), w2.ravel(), b2.ravel()])

    def logits(self, params: np.ndarray, X: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = self.unpack(params)
        hidden = np.tanh(X @ w1.T + b1)
        return hidden @ w2.T + b2

    def gradient(self, params: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = self.unpack(params)
        hidden = np.tanh(X @ w1.T + b1)
        P = _softmax(hidden @ w2.T + b2)
        P[np.arange(len(y)), y] -= 1.0
        P /= len(y)
        dw2 = P.T @ hidden
        db2 = P.sum(axis=0)
        dhidden = P @ w2
        dpre = dhidden * (1.0 - hidden * hidden)
        dw1 = dpre.T @ X
        db1 = dpre.sum(axis=0)
        return self.pack(dw1, db1, dw2, db2)


def make_model(kind: str, n_features: int, n_classes: int, hidden: int = 200):
    if kind == "linear":
        return LinearSoftmaxModel(n_features, n_classes)
    if kind == "mlp":
        return MlpModel(n_features, hidden, n_classes)
    raise ValueError(f"unknown model kind: {kind}")


def loss(model, params: np.ndarray, dataset: LabeledDataset) -> float:
    """Mean softmax cross-entropy over the dataset."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    logp = _log_softmax(model.logits(params, dataset.features))
    return float(-logp[np.arange(len(dataset)), dataset.labels].mean())


def gradient(model, params: np.ndarray, dataset: LabeledDataset) -> np.ndarray:
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    return model.gradient(params, dataset.features, dataset.labels)


def local_train(
    model,
    params: np.ndarray,
    dataset: LabeledDataset,
    cfg: TrainConfig,
    seed: int = 0,
) -> np.ndarray:
    """Run cfg.local_steps gradient-descent steps at rate cfg.local_lr."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(seed)
    p = params.copy()
    for _ in range(cfg.local_steps):
        if cfg.batch_size is None:
            X, y = dataset.features, dataset.labels
        else:
            idx = rng.choice(len(dataset), size=min(cfg.batch_size, len(dataset)), replace=False)
            X, y = dataset.features[idx], dataset.labels[idx]
        p -= cfg.local_lr * model.gradient(p, X, y)
    return p


def evaluate_error(model, params: np.ndarray, dataset: LabeledDataset) -> float:
    """Percentage of misclassified samples; argmax ties go to the smallest class."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    pred = np.argmax(model.logits(params, dataset.features), axis=1)
    return float(100.0 * np.mean(pred != dataset.labels))
