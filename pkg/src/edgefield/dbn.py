"""Doubling dense network over window rows.

The layer plan starts with an m -> m rectified-linear layer, then doubles
width twice per round for m rounds starting from 2 (so 2 -> 4 -> 8 -> 16 ...),
and ends in an n_classes softmax readout. When m != 2 a linear m -> 2 adapter
bridges the input block into the doubling ladder. Training is categorical
cross-entropy under adam. Everything is plain numpy, float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import PixelGrid
from .segmentation import _window_grid, substitute_by_windows

SELU_LAMBDA = 1.0507009873554804934193349852946
SELU_ALPHA = 1.6732632423543772848170429916717
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class InvalidSpec(ValueError):
    """Network shape parameters out of range."""


class ShapeMismatch(ValueError):
    """Batch width does not match the model's input width."""


class EmptyDataset(ValueError):
    """Training requires at least one row."""


class UntrainedModel(ValueError):
    """Operation requires a trained model."""


@dataclass
class Layer:
    w: np.ndarray  # (fan_in, fan_out)
    b: np.ndarray  # (fan_out,)
    activation: str  # relu | selu | linear | softmax


@dataclass
class DbnModel:
    m: int
    n_classes: int
    layers: list[Layer]
    trained: bool = False
    class_reps: np.ndarray | None = None  # mean 0..255 intensity per class
    loss_trace: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class RowDataset:
    """Scaled pixel rows (n, width) in [0, 1] with integer class labels (n,)."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2:
            raise ValueError(f"inputs must be 2-D, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ValueError(f"labels must be ({x.shape[0]},), got {y.shape}")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.inputs.shape[0]


def layer_plan(m: int, n_classes: int) -> list[tuple[int, int, str]]:
    """(fan_in, fan_out, activation) triples of the doubling architecture."""
    if m < 2:
        raise InvalidSpec(f"input width m must be >= 2, got {m}")
    if n_classes < 2:
        raise InvalidSpec(f"n_classes must be >= 2, got {n_classes}")
    plan = [(m, m, "relu")]
    if m != 2:
        plan.append((m, 2, "linear"))
    odim = 2
    for _ in range(m):
        dim = 2 * odim
        plan.append((odim, dim, "selu"))
        odim = 2 * dim
        plan.append((dim, odim, "selu"))
    plan.append((odim, n_classes, "softmax"))
    return plan


def build_dbn(m: int, n_classes: int, seed: int = 0) -> DbnModel:
    """He-initialized Gaussian weights (std sqrt(2/fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    layers = [
        Layer(
            w=rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)),
            b=np.zeros(fan_out),
            activation=act,
        )
        for fan_in, fan_out, act in layer_plan(m, n_classes)
    ]
    return DbnModel(m=m, n_classes=n_classes, layers=layers)


def _selu(z: np.ndarray) -> np.ndarray:
    return SELU_LAMBDA * np.where(z > 0, z, SELU_ALPHA * np.expm1(z))


def _selu_grad(z: np.ndarray) -> np.ndarray:
    return SELU_LAMBDA * np.where(z > 0, 1.0, SELU_ALPHA * np.exp(z))


def _apply(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "selu":
        return _selu(z)
    return z  # linear adapter and softmax scores pass through


def _forward_scores(model: DbnModel, batch: np.ndarray) -> tuple[list, list, np.ndarray]:
    """Activations and pre-activations per layer plus the readout scores."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.m:
        raise ShapeMismatch(
            f"batch must be (n, {model.m}), got {np.asarray(batch).shape}"
        )
    acts = [x]
    pre = []
    for layer in model.layers:
        z = acts[-1] @ layer.w + layer.b
        pre.append(z)
        acts.append(_apply(z, layer.activation))
    return acts, pre, acts[-1]


def forward(model: DbnModel, batch: np.ndarray) -> np.ndarray:
    """Class probabilities (n, n_classes); rows sum to 1."""
    _, _, scores = _forward_scores(model, batch)
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grads(
    model: DbnModel, batch: np.ndarray, labels: np.ndarray
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Mean categorical cross-entropy and its gradient per layer (dW, db)."""
    y = np.asarray(labels, dtype=np.int64)
    acts, pre, scores = _forward_scores(model, batch)
    n = scores.shape[0]
    shifted = scores - scores.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = -float(logp[np.arange(n), y].mean())

    d = (np.exp(logp) - np.eye(model.n_classes)[y]) / n
    grads: list[tuple[np.ndarray, np.ndarray]] = []
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        grads.append((acts[i].T @ d, d.sum(axis=0)))
        if i > 0:
            d = d @ layer.w.T
            below = model.layers[i - 1]
            if below.activation == "relu":
                d = d * (pre[i - 1] > 0)
            elif below.activation == "selu":
                d = d * _selu_grad(pre[i - 1])
    grads.reverse()
    return loss, grads


def train(
    model: DbnModel,
    dataset: RowDataset,
    epochs: int = 100,
    lr: float = 1e-3,
    batch_size: int = 32,
    seed: int = 0,
) -> list[float]:
    """Adam descent on shuffled mini-batches; returns per-epoch mean losses.

    Also records the class representatives (mean 0..255 intensity of each
    class's rows) used by the window smoother.
    """
    n = len(dataset)
    if n == 0:
        raise EmptyDataset("training dataset has no rows")
    if epochs < 1 or batch_size < 1:
        raise ValueError("epochs and batch_size must be >= 1")
    rng = np.random.default_rng(seed)
    mom = [
        (np.zeros_like(l.w), np.zeros_like(l.b), np.zeros_like(l.w), np.zeros_like(l.b))
        for l in model.layers
    ]
    step = 0
    losses = []
    for _ in range(epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            loss, grads = loss_and_grads(model, dataset.inputs[idx], dataset.labels[idx])
            total += loss * idx.size
            step += 1
            c1 = 1.0 - ADAM_BETA1**step
            c2 = 1.0 - ADAM_BETA2**step
            for layer, m_state, (dw, db) in zip(model.layers, mom, grads):
                mw, mb, vw, vb = m_state
                mw *= ADAM_BETA1
                mw += (1 - ADAM_BETA1) * dw
                mb *= ADAM_BETA1
                mb += (1 - ADAM_BETA1) * db
                vw *= ADAM_BETA2
                vw += (1 - ADAM_BETA2) * dw * dw
                vb *= ADAM_BETA2
                vb += (1 - ADAM_BETA2) * db * db
                layer.w -= lr * (mw / c1) / (np.sqrt(vw / c2) + ADAM_EPS)
                layer.b -= lr * (mb / c1) / (np.sqrt(vb / c2) + ADAM_EPS)
        losses.append(total / n)

    reps = np.empty(model.n_classes)
    overall = float(dataset.inputs.mean() * 255.0) if n else 0.0
    for k in range(model.n_classes):
        rows = dataset.inputs[dataset.labels == k]
        reps[k] = float(rows.mean() * 255.0) if rows.size else overall
    model.class_reps = reps
    model.trained = True
    model.loss_trace.extend(losses)
    return losses


def fit_rows(rows: np.ndarray, width: int) -> np.ndarray:
    """Truncate or zero-pad rows on the right to the model's input width."""
    n, have = rows.shape
    if have == width:
        return rows
    if have > width:
        return rows[:, :width]
    out = np.zeros((n, width), dtype=rows.dtype)
    out[:, :have] = rows
    return out


def dataset_from_grid(grid: PixelGrid, m_c: int, n_classes: int = 2) -> RowDataset:
    """One input row per window row of the (m_c+1)-windows at stride m_c,
    intensities scaled to [0,1]; labels are n_classes-quantile bins of the
    row mean (a constant grid collapses into the single bin 0)."""
    from numpy.lib.stride_tricks import sliding_window_view

    n_wr = _window_grid(grid.rows, m_c)
    n_wc = _window_grid(grid.cols, m_c)
    w = m_c + 1
    wins = sliding_window_view(grid.values, (w, w))[::m_c, ::m_c]
    rows = wins.reshape(n_wr * n_wc * w, w).astype(np.float64) / 255.0
    means = rows.mean(axis=1)
    edges = np.quantile(means, [j / n_classes for j in range(1, n_classes)])
    labels = np.searchsorted(edges, means, side="left")
    return RowDataset(inputs=rows, labels=labels)


def smooth_dbn(grid: PixelGrid, model: DbnModel, m_c: int, epsilon: int) -> PixelGrid:
    """Window substitution driven by the trained classifier: each window takes
    the majority class of its rows (ties to the smaller class id) and offers
    that class's representative intensity; overlap resolution matches the
    empirical smoother."""
    if not model.trained or model.class_reps is None:
        raise UntrainedModel("smooth_dbn needs a trained model")
    from numpy.lib.stride_tricks import sliding_window_view

    n_wr = _window_grid(grid.rows, m_c)
    n_wc = _window_grid(grid.cols, m_c)
    w = m_c + 1
    wins = sliding_window_view(grid.values, (w, w))[::m_c, ::m_c]
    rows = wins.reshape(n_wr * n_wc * w, w).astype(np.float64) / 255.0
    probs = forward(model, fit_rows(rows, model.m))
    cls = probs.argmax(axis=1)
    counts = np.zeros((n_wr * n_wc, model.n_classes), dtype=np.int32)
    np.add.at(counts, (np.repeat(np.arange(n_wr * n_wc), w), cls), 1)
    majority = counts.argmax(axis=1)
    reps = np.clip(np.rint(model.class_reps), 0, 255).astype(np.uint8)
    per_window = reps[majority].reshape(n_wr, n_wc)
    return substitute_by_windows(grid, per_window, m_c, epsilon)
