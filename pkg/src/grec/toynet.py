"""Desk-scale multi-label classifier trained with the scaled weighted loss.

One hidden ReLU layer with per-label sigmoid outputs. The hidden
activations double as item embeddings for retrieval, and every gradient is
derived by hand -- including the product-rule terms through the
(1 - soft F1) * (1 - soft IOU) multipliers -- so the loss arithmetic can be
checked against central finite differences.

All numerics are 64-bit. Training is plain minibatch gradient descent and
is a pure function of (dataset, config, weights): the seed fixes both the
initialization and the shuffling.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from . import lossmetrics
from .errors import DataError
from .lossmetrics import CLIP_EPS


class TrainingDivergence(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged: loss is not finite at epoch {epoch}")
        self.epoch = epoch


@dataclass
class ToyModel:
    w1: np.ndarray  # (input_dim, hidden_dim)
    b1: np.ndarray  # (hidden_dim,)
    w2: np.ndarray  # (hidden_dim, n_labels)
    b2: np.ndarray  # (n_labels,)

    def __post_init__(self) -> None:
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        if self.w1.ndim != 2 or self.w2.ndim != 2:
            raise ValueError("w1 and w2 must be matrices")
        if self.b1.shape != (self.w1.shape[1],) or self.b2.shape != (self.w2.shape[1],):
            raise ValueError("bias shapes do not match weight matrices")
        if self.w1.shape[1] != self.w2.shape[0]:
            raise ValueError("hidden dimensions of w1 and w2 disagree")
        for name, arr in self.params().items():
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"parameter {name} contains non-finite values")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def n_labels(self) -> int:
        return self.w2.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def copy(self) -> "ToyModel":
        return ToyModel(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1.0
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    use_scaling: bool = True

    def __post_init__(self) -> None:
        # learning_rate 0 is allowed: it freezes the model, which is a
        # useful no-update baseline.
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch_size must be positive")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    soft_f1: float
    soft_iou: float


def init_model(
    input_dim: int, hidden_dim: int, n_labels: int, rng: np.random.Generator
) -> ToyModel:
    """Uniform [-0.5, 0.5] / sqrt(fan_in) initialization for every parameter."""
    if min(input_dim, hidden_dim, n_labels) <= 0:
        raise ValueError("all dimensions must be positive")
    s1 = np.sqrt(input_dim)
    s2 = np.sqrt(hidden_dim)
    return ToyModel(
        w1=rng.uniform(-0.5, 0.5, (input_dim, hidden_dim)) / s1,
        b1=rng.uniform(-0.5, 0.5, hidden_dim) / s1,
        w2=rng.uniform(-0.5, 0.5, (hidden_dim, n_labels)) / s2,
        b2=rng.uniform(-0.5, 0.5, n_labels) / s2,
    )


def _as_inputs(x, model: ToyModel) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != model.input_dim:
        raise ValueError(
            f"input has shape {np.shape(x)}, expected (..., {model.input_dim})"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("input contains non-finite values")
    return arr, single


def forward(x, model: ToyModel) -> tuple[np.ndarray, np.ndarray]:
    """Return (hidden activations, clipped sigmoid outputs)."""
    arr, single = _as_inputs(x, model)
    hidden = np.maximum(arr @ model.w1 + model.b1, 0.0)
    outputs = np.clip(expit(hidden @ model.w2 + model.b2), CLIP_EPS, 1.0 - CLIP_EPS)
    if single:
        return hidden[0], outputs[0]
    return hidden, outputs


def embed(x, model: ToyModel) -> np.ndarray:
    """The hidden-layer activations, used downstream as the item embedding."""
    return forward(x, model)[0]


def batch_loss(
    model: ToyModel, inputs, targets, weights, use_scaling: bool = True
) -> float:
    """The exact scalar objective that ``gradients`` differentiates."""
    _, outputs = forward(inputs, model)
    outputs = np.atleast_2d(outputs)
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if use_scaling:
        return lossmetrics.scaled_loss(outputs, targets, weights)
    return lossmetrics.weighted_bce(outputs, targets, weights)


def gradients(
    model: ToyModel, inputs, targets, weights, use_scaling: bool = True
) -> tuple[float, dict[str, np.ndarray]]:
    """Analytic gradients of the (optionally scaled) batch loss.

    The scaling multipliers are differentiated through, not detached:
    with B the mean weighted BCE, T/P/N the pooled soft counts,
    S1 = 2T+P+N and S2 = T+P+N,

        dF1/do  = 2 (t * S1 - T) / S1^2
        dIOU/do = (t * S2 - T (1 - t)) / S2^2

    and the product rule combines them with dB/do. Returns (loss, grads).
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    t = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if x.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    if t.shape != (x.shape[0], model.n_labels):
        raise ValueError(f"targets shape {t.shape} does not match batch/model")
    if not np.all((t == 0.0) | (t == 1.0)):
        raise ValueError("targets must be 0 or 1")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (model.n_labels,):
        raise ValueError("weights length does not match the label count")

    m, n = t.shape
    z1 = x @ model.w1 + model.b1
    h = np.maximum(z1, 0.0)
    o_raw = expit(h @ model.w2 + model.b2)
    o = np.clip(o_raw, CLIP_EPS, 1.0 - CLIP_EPS)

    per_label = w * (t * np.log(o) + (1.0 - t) * np.log(1.0 - o))
    bce = float(-per_label.mean(axis=-1).mean())
    d_bce = -(w / (m * n)) * (t / o - (1.0 - t) / (1.0 - o))

    if use_scaling:
        tp = float(np.sum(o * t))
        fp = float(np.sum(o * (1.0 - t)))
        fn = float(np.sum((1.0 - o) * t))
        if lossmetrics._degenerate(tp, fp, fn, o.size):
            # Both multipliers are 0 and the loss sits at its floor; the
            # clip mask below is 0 everywhere too, so the gradient vanishes.
            zero = {name: np.zeros_like(arr) for name, arr in model.params().items()}
            return 0.0, zero
        s1 = 2.0 * tp + fp + fn
        s2 = tp + fp + fn
        f1 = 2.0 * tp / s1
        iou = tp / s2
        d_f1 = 2.0 * (t * s1 - tp) / (s1 * s1)
        d_iou = (t * s2 - tp * (1.0 - t)) / (s2 * s2)
        loss = bce * (1.0 - f1) * (1.0 - iou)
        d_out = (
            d_bce * (1.0 - f1) * (1.0 - iou)
            - bce * (1.0 - iou) * d_f1
            - bce * (1.0 - f1) * d_iou
        )
    else:
        loss = bce
        d_out = d_bce

    if not np.isfinite(loss):
        raise ValueError("loss is not finite")

    inside_clip = (o_raw > CLIP_EPS) & (o_raw < 1.0 - CLIP_EPS)
    g2 = d_out * inside_clip * o_raw * (1.0 - o_raw)
    gh = (g2 @ model.w2.T) * (z1 > 0.0)
    grads = {
        "w1": x.T @ gh,
        "b1": gh.sum(axis=0),
        "w2": h.T @ g2,
        "b2": g2.sum(axis=0),
    }
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient for parameter {name}")
    return loss, grads


def evaluate(model: ToyModel, inputs, targets, weights, use_scaling: bool = True):
    """Full-dataset loss plus the pooled soft F1/IOU."""
    _, outputs = forward(inputs, model)
    outputs = np.atleast_2d(outputs)
    t = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    f1 = lossmetrics.soft_f1(outputs, t)
    iou = lossmetrics.soft_iou(outputs, t)
    bce = lossmetrics.weighted_bce(outputs, t, weights)
    loss = bce * (1.0 - f1) * (1.0 - iou) if use_scaling else bce
    return loss, f1, iou


def train(
    inputs, targets, config: TrainConfig, weights, hidden_dim: int = 8
) -> tuple[ToyModel, list[EpochStats]]:
    """Minibatch gradient descent; history holds one post-epoch evaluation row."""
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    t = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if x.shape[0] == 0:
        raise ValueError("dataset must be nonempty")
    if t.shape[0] != x.shape[0]:
        raise ValueError("inputs and targets disagree on sample count")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (t.shape[1],):
        raise ValueError("weights length does not match the label count")

    rng = np.random.default_rng(config.seed)
    model = init_model(x.shape[1], hidden_dim, t.shape[1], rng)
    m = x.shape[0]
    history: list[EpochStats] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(m)
        for start in range(0, m, config.batch_size):
            batch = order[start : start + config.batch_size]
            try:
                _, grads = gradients(model, x[batch], t[batch], w, config.use_scaling)
            except ValueError as exc:
                raise TrainingDivergence(epoch) from exc
            for name, arr in model.params().items():
                arr -= config.learning_rate * grads[name]
        loss, f1, iou = evaluate(model, x, t, w, config.use_scaling)
        if not np.isfinite(loss):
            raise TrainingDivergence(epoch)
        history.append(EpochStats(epoch=epoch, loss=loss, soft_f1=f1, soft_iou=iou))
    return model, history


def make_separable_dataset(
    n_samples: int = 200, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Two well-separated 2D blobs, one exclusive label per blob."""
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    half = n_samples // 2
    xa = rng.normal(loc=(+2.0, 0.0), scale=0.4, size=(half, 2))
    xb = rng.normal(loc=(-2.0, 0.0), scale=0.4, size=(n_samples - half, 2))
    x = np.vstack([xa, xb])
    t = np.zeros((n_samples, 2))
    t[:half, 0] = 1.0
    t[half:, 1] = 1.0
    return x, t


def save_model(model: ToyModel, path: str | Path) -> None:
    """JSON with a dimension header and row-major 64-bit parameter arrays."""
    obj = {
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "n_labels": model.n_labels,
        "w1": model.w1.tolist(),
        "b1": model.b1.tolist(),
        "w2": model.w2.tolist(),
        "b2": model.b2.tolist(),
    }
    Path(path).write_text(json.dumps(obj), encoding="utf-8")


def load_model(path: str | Path) -> ToyModel:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed model JSON: {exc.msg}") from exc
    try:
        model = ToyModel(
            w1=np.array(obj["w1"], dtype=np.float64),
            b1=np.array(obj["b1"], dtype=np.float64),
            w2=np.array(obj["w2"], dtype=np.float64),
            b2=np.array(obj["b2"], dtype=np.float64),
        )
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: bad model file: {exc}") from exc
    declared = (obj.get("input_dim"), obj.get("hidden_dim"), obj.get("n_labels"))
    if declared != (model.input_dim, model.hidden_dim, model.n_labels):
        raise DataError(f"{path}: dimension header does not match parameter shapes")
    return model


def write_history(history: list[EpochStats], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "soft_f1", "soft_iou"])
        for row in history:
            writer.writerow([row.epoch, repr(row.loss), repr(row.soft_f1), repr(row.soft_iou)])
