"""Small feedforward classifier in float64 numpy: inference, input gradients, SGD training."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, FormatError, InputShapeError, ParseError
from .stats import RngStream

log = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "identity")
MAGIC = "ANCER-MLP v1"


@dataclass(frozen=True)
class Layer:
    weight: np.ndarray  # (rows, cols) = (out, in)
    bias: np.ndarray  # (rows,)
    activation: str = "relu"

    def __post_init__(self):
        w = np.array(self.weight, dtype=np.float64)
        b = np.array(self.bias, dtype=np.float64).reshape(-1)
        if w.ndim != 2:
            raise InputShapeError("layer weight must be a matrix")
        if b.shape[0] != w.shape[0]:
            raise InputShapeError(f"bias length {b.shape[0]} != weight rows {w.shape[0]}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class Classifier:
    """Feedforward network ending in a softmax over ``num_classes`` outputs."""

    layers: tuple[Layer, ...]
    train_accuracy: float | None = field(default=None, compare=False)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise InputShapeError("a classifier needs at least one layer")
        for t in range(1, len(layers)):
            if layers[t].weight.shape[1] != layers[t - 1].weight.shape[0]:
                raise InputShapeError(
                    f"layer {t} expects {layers[t].weight.shape[1]} inputs, "
                    f"layer {t - 1} produces {layers[t - 1].weight.shape[0]}")
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def num_classes(self) -> int:
        return self.layers[-1].weight.shape[0]

    def same_weights(self, other: "Classifier") -> bool:
        if len(self.layers) != len(other.layers):
            return False
        return all(
            a.activation == b.activation
            and np.array_equal(a.weight, b.weight)
            and np.array_equal(a.bias, b.bias)
            for a, b in zip(self.layers, other.layers))


@dataclass
class Dataset:
    inputs: np.ndarray  # (count, n)
    labels: np.ndarray  # (count,)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.inputs.ndim != 2:
            if self.inputs.size == 0:
                self.inputs = self.inputs.reshape(0, 0)
            else:
                raise DataError("inputs must be a 2-D array")
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise DataError(f"{self.inputs.shape[0]} inputs but {self.labels.shape[0]} labels")
        if self.labels.size and self.labels.min() < 0:
            raise DataError("labels must be non-negative")

    def __len__(self):
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def subset(self, index) -> "Dataset":
        return Dataset(self.inputs[index], self.labels[index])


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _check_batch(model: Classifier, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise InputShapeError(f"expected inputs of dimension {model.input_dim}, got shape {x.shape}")
    return x


def _forward_cache(model: Classifier, x: np.ndarray):
    pre = []
    h = x
    for layer in model.layers:
        z = h @ layer.weight.T + layer.bias
        pre.append(z)
        h = np.maximum(z, 0.0) if layer.activation == "relu" else z
    return h, pre


def logits_batch(model: Classifier, x) -> np.ndarray:
    # inference only: no pre-activation cache, in-place bias and ReLU
    h = _check_batch(model, x)
    for layer in model.layers:
        z = h @ layer.weight.T
        z += layer.bias
        h = np.maximum(z, 0.0, out=z) if layer.activation == "relu" else z
    return h


def forward_batch(model: Classifier, x) -> np.ndarray:
    """Softmax probabilities for each row of ``x``; shape (m, K)."""
    return _softmax(logits_batch(model, x))


def forward(model: Classifier, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputShapeError("forward takes a single input vector; use forward_batch")
    return forward_batch(model, x[None, :])[0]


def predict_batch(model: Classifier, x) -> np.ndarray:
    """Hard argmax class per row; ties go to the lowest index (np.argmax semantics)."""
    return np.argmax(logits_batch(model, x), axis=1)


def _softmax_vjp(probs: np.ndarray, grad_probs: np.ndarray) -> np.ndarray:
    return probs * (grad_probs - (grad_probs * probs).sum(axis=1, keepdims=True))


def _backward(model: Classifier, x: np.ndarray, pre, grad_logits: np.ndarray):
    """Backpropagate ``grad_logits``; returns (grad wrt x, [(grad W, grad b), ...])."""
    g = grad_logits
    param_grads = []
    for t in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[t]
        if layer.activation == "relu":
            g = g * (pre[t] > 0.0)  # subgradient 0 at the kink
        h_in = x if t == 0 else (np.maximum(pre[t - 1], 0.0)
                                 if model.layers[t - 1].activation == "relu" else pre[t - 1])
        param_grads.append((g.T @ h_in, g.sum(axis=0)))
        g = g @ layer.weight
    param_grads.reverse()
    return g, param_grads


def weighted_input_gradient(model: Classifier, x, weights) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise gradient of sum_c weights[j, c] * softmax_c(f(x_j)) w.r.t. x_j.

    Returns ``(probs, grads)`` with shapes (m, K) and (m, n). Used by the
    reparameterized gap estimator, which needs several heads in one pass.
    """
    x = _check_batch(model, x)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim == 1:
        weights = np.broadcast_to(weights, (x.shape[0], weights.shape[0]))
    logits, pre = _forward_cache(model, x)
    probs = _softmax(logits)
    grad, _ = _backward(model, x, pre, _softmax_vjp(probs, weights))
    return probs, grad


def input_gradient(model: Classifier, x, head: int) -> np.ndarray:
    """Gradient of softmax_head(f(x)) with respect to the input vector ``x``."""
    if not (0 <= head < model.num_classes):
        raise IndexError(f"head {head} out of range for {model.num_classes} classes")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputShapeError("input_gradient takes a single input vector")
    onehot = np.zeros(model.num_classes)
    onehot[head] = 1.0
    return weighted_input_gradient(model, x[None, :], onehot)[1][0]


def init_classifier(arch: Sequence[int], seed: int, activation: str = "relu") -> Classifier:
    """Glorot-uniform weights, zero biases; hidden layers use ``activation``, last is identity."""
    if len(arch) < 2 or any(int(a) < 1 for a in arch):
        raise DataError(f"invalid architecture {list(arch)!r}")
    rng = RngStream(seed, 0)
    layers = []
    for t in range(len(arch) - 1):
        fan_in, fan_out = int(arch[t]), int(arch[t + 1])
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = (2.0 * rng.uniform((fan_out, fan_in)) - 1.0) * bound
        act = activation if t < len(arch) - 2 else "identity"
        layers.append(Layer(w, np.zeros(fan_out), act))
    return Classifier(tuple(layers))


def accuracy(model: Classifier, data: Dataset) -> float:
    if len(data) == 0:
        return float("nan")
    return float(np.mean(predict_batch(model, data.inputs) == data.labels))


def train_classifier(data: Dataset, arch: Sequence[int], lr: float = 0.05, epochs: int = 200,
                     batch: int = 32, seed: int = 0, noise_sd: float = 0.0) -> Classifier:
    """Minibatch SGD on softmax cross-entropy.

    ``noise_sd > 0`` adds isotropic Gaussian input noise to every minibatch, the
    usual way base classifiers are prepared for smoothing.
    """
    if len(data) == 0:
        raise DataError("cannot train on an empty dataset")
    arch = [int(a) for a in arch]
    if arch[0] != data.dim:
        raise DataError(f"architecture input {arch[0]} != data dimension {data.dim}")
    if data.labels.max() >= arch[-1]:
        raise DataError(f"label {int(data.labels.max())} needs more than {arch[-1]} outputs")
    model = init_classifier(arch, seed)
    if epochs <= 0:
        return model

    weights = [np.array(l.weight) for l in model.layers]
    biases = [np.array(l.bias) for l in model.layers]
    acts = [l.activation for l in model.layers]
    rng = RngStream(seed, 1)
    count = len(data)
    for _ in range(epochs):
        order = rng.permutation(count)
        for start in range(0, count, batch):
            idx = order[start:start + batch]
            xb = data.inputs[idx]
            if noise_sd > 0.0:
                xb = xb + noise_sd * rng.normal(xb.shape)
            yb = data.labels[idx]
            current = Classifier(tuple(Layer(w, b, a) for w, b, a in zip(weights, biases, acts)))
            logits, pre = _forward_cache(current, xb)
            probs = _softmax(logits)
            g = probs.copy()
            g[np.arange(len(yb)), yb] -= 1.0
            _, pgrads = _backward(current, xb, pre, g / len(yb))
            for t, (gw, gb) in enumerate(pgrads):
                weights[t] -= lr * gw
                biases[t] -= lr * gb
    trained = Classifier(tuple(Layer(w, b, a) for w, b, a in zip(weights, biases, acts)))
    acc = accuracy(trained, data)
    log.info("training accuracy %.4f after %d epochs", acc, epochs)
    return Classifier(trained.layers, train_accuracy=acc)


def save_model(model: Classifier, path) -> None:
    lines = [MAGIC, f"{len(model.layers)} {model.input_dim} {model.num_classes}"]
    for layer in model.layers:
        rows, cols = layer.weight.shape
        lines.append(f"{rows} {cols} {layer.activation}")
        for row in layer.weight:
            lines.append(" ".join(f"{v:.17g}" for v in row))
        lines.append(" ".join(f"{v:.17g}" for v in layer.bias))
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> Classifier:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read model file: {exc}", path=path) from exc
    lines = text.splitlines()
    pos = 0

    def next_line():
        nonlocal pos
        if pos >= len(lines):
            raise ParseError("unexpected end of file", path=path, line=pos + 1)
        pos += 1
        return lines[pos - 1]

    def numbers(line_text, expected, kind=float):
        parts = line_text.split()
        if len(parts) != expected:
            raise ParseError(f"expected {expected} values, found {len(parts)}", path=path, line=pos)
        try:
            return [kind(p) for p in parts]
        except ValueError as exc:
            raise ParseError(f"bad number: {exc}", path=path, line=pos) from exc

    if next_line().strip() != MAGIC:
        raise FormatError(f"missing magic line {MAGIC!r}", path=path, line=1)
    n_layers, n_in, n_out = numbers(next_line(), 3, int)
    layers = []
    for _ in range(n_layers):
        head = next_line().split()
        if len(head) != 3:
            raise ParseError("layer header must be 'rows cols activation'", path=path, line=pos)
        try:
            rows, cols = int(head[0]), int(head[1])
        except ValueError as exc:
            raise ParseError(f"bad layer header: {exc}", path=path, line=pos) from exc
        if head[2] not in ACTIVATIONS:
            raise ParseError(f"unknown activation {head[2]!r}", path=path, line=pos)
        w = np.array([numbers(next_line(), cols) for _ in range(rows)]).reshape(rows, cols)
        b = np.array(numbers(next_line(), rows))
        layers.append(Layer(w, b, head[2]))
    if any(l.strip() for l in lines[pos:]):
        raise ParseError("trailing content after last layer", path=path, line=pos + 1)
    try:
        model = Classifier(tuple(layers))
    except InputShapeError as exc:
        raise ParseError(str(exc), path=path) from exc
    if model.input_dim != n_in or model.num_classes != n_out:
        raise ParseError("layer shapes disagree with header", path=path, line=2)
    return model
