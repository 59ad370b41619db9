"""Small from-scratch MLP for certainty scoring of candidate features.

One hidden ReLU layer over the five per-context similarity features, a
logistic output, binary cross-entropy, and per-row SGD.  An epoch whose
train loss worsens is rolled back and the learning rate halved, so the
recorded train-loss curve is non-increasing; early stopping watches the
dev split and the best-dev weights are what training returns.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .contexts import CONTEXT_TYPES
from .errors import FormatError, InputError, TrainingError

FEATURE_WIDTH = len(CONTEXT_TYPES)
SPLITS = ("train", "dev")
#: Output probabilities are clamped to this open interval so downstream
#: log-loss and certainty math never sees an exact 0 or 1.
PROB_EPS = 1e-12

_CSV_HEADER = ["f1", "f2", "f3", "f4", "f5", "label", "split"]


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return float(e / (1.0 + e))


@dataclass
class MLPConfig:
    hidden: int = 8
    lr: float = 0.1
    epochs: int = 200
    seed: int = 1
    patience: int = 20

    def __post_init__(self) -> None:
        if self.hidden < 1:
            raise InputError("hidden must be >= 1")
        if self.lr <= 0:
            raise InputError("lr must be positive")
        if self.epochs < 0:
            raise InputError("epochs must be >= 0")
        if self.patience < 0:
            raise InputError("patience must be >= 0")


@dataclass
class MLPModel:
    """Parameters of a [FEATURE_WIDTH, hidden, 1] network."""

    w1: np.ndarray  # hidden x FEATURE_WIDTH
    b1: np.ndarray  # hidden
    w2: np.ndarray  # 1 x hidden
    b2: np.ndarray  # 1

    @property
    def sizes(self) -> list[int]:
        return [self.w1.shape[1], self.w1.shape[0], 1]

    def copy(self) -> "MLPModel":
        return MLPModel(
            self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy()
        )

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]


def init_model(hidden: int, rng: np.random.Generator) -> MLPModel:
    """Uniform init in +/- sqrt(6 / (fan_in + fan_out)); zero biases."""
    lim1 = np.sqrt(6.0 / (FEATURE_WIDTH + hidden))
    lim2 = np.sqrt(6.0 / (hidden + 1))
    return MLPModel(
        w1=rng.uniform(-lim1, lim1, size=(hidden, FEATURE_WIDTH)),
        b1=np.zeros(hidden),
        w2=rng.uniform(-lim2, lim2, size=(1, hidden)),
        b2=np.zeros(1),
    )


def forward(model: MLPModel, features: Sequence[float]) -> float:
    """Probability in (0, 1) for one feature vector."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape != (FEATURE_WIDTH,):
        raise InputError(
            f"expected {FEATURE_WIDTH} features, got shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise InputError("features must be finite")
    h = np.maximum(model.w1 @ x + model.b1, 0.0)
    z = float((model.w2 @ h + model.b2)[0])
    p = _sigmoid(z)
    return float(min(max(p, PROB_EPS), 1.0 - PROB_EPS))


def _forward_batch(model: MLPModel, X: np.ndarray) -> np.ndarray:
    H = np.maximum(X @ model.w1.T + model.b1, 0.0)
    Z = H @ model.w2.T + model.b2
    P = 1.0 / (1.0 + np.exp(-Z[:, 0]))
    return np.clip(P, PROB_EPS, 1.0 - PROB_EPS)


def mean_loss(model: MLPModel, X: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy over a row set."""
    p = _forward_batch(model, X)
    return float(np.mean(-y * np.log(p) - (1.0 - y) * np.log(1.0 - p)))


def sum_loss(model: MLPModel, X: np.ndarray, y: np.ndarray) -> float:
    p = _forward_batch(model, X)
    return float(np.sum(-y * np.log(p) - (1.0 - y) * np.log(1.0 - p)))


def _gradients(model: MLPModel, X: np.ndarray, y: np.ndarray):
    """Analytic gradients of the sum loss over the batch."""
    Z1 = X @ model.w1.T + model.b1  # n x hidden
    H = np.maximum(Z1, 0.0)
    Z = H @ model.w2.T + model.b2  # n x 1
    P = 1.0 / (1.0 + np.exp(-Z[:, 0]))
    dZ = (P - y)[:, None]  # n x 1
    gw2 = dZ.T @ H  # 1 x hidden
    gb2 = dZ.sum(axis=0)  # 1
    dH = dZ @ model.w2  # n x hidden
    dZ1 = dH * (Z1 > 0)
    gw1 = dZ1.T @ X  # hidden x width
    gb1 = dZ1.sum(axis=0)
    return [gw1, gb1, gw2, gb2]


def grad_check(
    model: MLPModel, X: np.ndarray, y: np.ndarray, h: float = 1e-5
) -> float:
    """Max relative error between analytic and central-difference gradients.

    The checked quantity is the sum loss over the batch, so gradients add
    linearly across rows.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(X) == 0:
        raise InputError("grad_check needs a nonempty batch")
    analytic = _gradients(model, X, y)
    worst = 0.0
    for param, grad in zip(model.params(), analytic):
        flat = param.ravel()
        gflat = np.asarray(grad, dtype=np.float64).ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            plus = sum_loss(model, X, y)
            flat[i] = orig - h
            minus = sum_loss(model, X, y)
            flat[i] = orig
            numeric = (plus - minus) / (2.0 * h)
            denom = max(abs(gflat[i]) + abs(numeric), 1e-8)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst


# ---------------------------------------------------------------------------
# Labeled data
# ---------------------------------------------------------------------------


@dataclass
class TrainSet:
    features: np.ndarray  # n x FEATURE_WIDTH
    labels: np.ndarray  # n, values in {0, 1}
    splits: list[str] = field(default_factory=list)  # "train" | "dev" per row

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[1] != FEATURE_WIDTH:
            raise InputError(
                f"features must be n x {FEATURE_WIDTH}, got {self.features.shape}"
            )
        n = self.features.shape[0]
        if self.labels.shape != (n,) or len(self.splits) != n:
            raise InputError("features, labels and splits must align")
        if not np.all(np.isin(self.labels, (0.0, 1.0))):
            raise InputError("labels must be 0 or 1")
        bad = set(self.splits) - set(SPLITS)
        if bad:
            raise InputError(f"unknown split tag(s): {sorted(bad)}")

    def rows(self, split: str) -> tuple[np.ndarray, np.ndarray]:
        mask = np.asarray([s == split for s in self.splits])
        return self.features[mask], self.labels[mask]


def save_trainset(data: TrainSet, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for feats, label, split in zip(
            data.features, data.labels, data.splits
        ):
            writer.writerow(
                [repr(float(f)) for f in feats] + [int(label), split]
            )


def load_trainset(path: str | Path) -> TrainSet:
    path = Path(path)
    feats: list[list[float]] = []
    labels: list[float] = []
    splits: list[str] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if lineno == 1 and row[0].strip().lower() == "f1":
                continue
            if len(row) != 7:
                raise FormatError(
                    f"{path} line {lineno}: expected 7 columns, got {len(row)}"
                )
            try:
                feats.append([float(v) for v in row[:FEATURE_WIDTH]])
            except ValueError as exc:
                raise FormatError(f"{path} line {lineno}: {exc}") from exc
            if row[5].strip() not in ("0", "1"):
                raise FormatError(
                    f"{path} line {lineno}: label must be 0 or 1, got {row[5]!r}"
                )
            labels.append(float(row[5]))
            split = row[6].strip()
            if split not in SPLITS:
                raise FormatError(
                    f"{path} line {lineno}: unknown split {split!r}"
                )
            splits.append(split)
    try:
        return TrainSet(np.asarray(feats).reshape(len(feats), FEATURE_WIDTH),
                        np.asarray(labels), splits)
    except InputError as exc:
        raise FormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainTrace:
    model: MLPModel
    train_losses: list[float]
    dev_losses: list[float]
    stopped_epoch: int


def train_traced(data: TrainSet, config: MLPConfig | None = None) -> TrainTrace:
    """Train and keep the per-epoch loss record.

    The recorded train loss never increases: an epoch that worsens it is
    reverted and the learning rate halved.  When dev rows exist, training
    stops after `patience` epochs without a dev-loss improvement and the
    best-dev weights win; otherwise the final weights are returned.
    """
    config = config or MLPConfig()
    X_train, y_train = data.rows("train")
    if len(X_train) == 0:
        raise TrainingError("train split is empty")
    if len(np.unique(y_train)) < 2:
        raise TrainingError("train split must contain both classes")
    X_dev, y_dev = data.rows("dev")

    rng = np.random.default_rng(config.seed)
    model = init_model(config.hidden, rng)

    lr = config.lr
    train_losses: list[float] = []
    dev_losses: list[float] = []
    prev_loss = mean_loss(model, X_train, y_train)
    best_dev = np.inf
    best_model = model.copy()
    stale = 0
    epoch = 0
    for epoch in range(1, config.epochs + 1):
        snapshot = model.copy()
        for i in rng.permutation(len(X_train)):
            grads = _gradients(model, X_train[i : i + 1], y_train[i : i + 1])
            for param, grad in zip(model.params(), grads):
                param -= lr * grad
        loss = mean_loss(model, X_train, y_train)
        if loss > prev_loss:
            model = snapshot
            lr /= 2.0
            loss = prev_loss
        prev_loss = loss
        train_losses.append(loss)
        if len(X_dev):
            dev = mean_loss(model, X_dev, y_dev)
            dev_losses.append(dev)
            if dev < best_dev:
                best_dev = dev
                best_model = model.copy()
                stale = 0
            else:
                stale += 1
                if stale > config.patience:
                    break
    final = best_model if len(X_dev) else model
    return TrainTrace(final, train_losses, dev_losses, epoch)


def train(data: TrainSet, config: MLPConfig | None = None) -> MLPModel:
    return train_traced(data, config).model


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------


def save_model(model: MLPModel, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "sizes": model.sizes,
        "weights": [model.w1.tolist(), model.w2.tolist()],
        "biases": [model.b1.tolist(), model.b2.tolist()],
    }
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> MLPModel:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read MLP model {path}: {exc}") from exc
    for key in ("sizes", "weights", "biases"):
        if key not in payload:
            raise FormatError(f"{path}: missing field {key!r}")
    sizes = payload["sizes"]
    if (
        not isinstance(sizes, list)
        or len(sizes) != 3
        or sizes[0] != FEATURE_WIDTH
        or sizes[2] != 1
    ):
        raise FormatError(f"{path}: bad layer sizes {sizes!r}")
    hidden = sizes[1]
    try:
        w1 = np.asarray(payload["weights"][0], dtype=np.float64)
        w2 = np.asarray(payload["weights"][1], dtype=np.float64)
        b1 = np.asarray(payload["biases"][0], dtype=np.float64)
        b2 = np.asarray(payload["biases"][1], dtype=np.float64)
    except (IndexError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad parameter payload: {exc}") from exc
    shapes = {
        "weights[0]": (w1.shape, (hidden, FEATURE_WIDTH)),
        "weights[1]": (w2.shape, (1, hidden)),
        "biases[0]": (b1.shape, (hidden,)),
        "biases[1]": (b2.shape, (1,)),
    }
    for name, (got, want) in shapes.items():
        if got != want:
            raise FormatError(f"{path}: {name} shape {got}, expected {want}")
    if not all(np.all(np.isfinite(a)) for a in (w1, b1, w2, b2)):
        raise FormatError(f"{path}: non-finite parameters")
    return MLPModel(w1=w1, b1=b1, w2=w2, b2=b2)
