"""From-scratch fully connected network: Glorot-uniform init, relu/tanh
hidden layers, softmax or identity output, minibatch SGD with momentum.

Everything is double precision and deterministic for a fixed seed; training
never mutates its input model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import SierraError


class BadArchitecture(SierraError):
    pass


class ShapeMismatch(SierraError):
    pass


class NonFiniteInput(SierraError):
    pass


@dataclass
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]  # per layer, shape (out, in)
    biases: list[np.ndarray]  # per layer, shape (out,)
    activation: str  # hidden activation: "relu" | "tanh"
    task: str  # "classification" (softmax out) | "regression" (identity out)
    seed: int

    def copy(self) -> "MlpModel":
        return MlpModel(
            layer_sizes=self.layer_sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
            task=self.task,
            seed=self.seed,
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    epochs: int
    batch_size: int = 32
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must be in [0, 1)")


def init_mlp(
    layer_sizes: list[int] | tuple[int, ...],
    activation: str = "tanh",
    task: str = "classification",
    seed: int = 0,
) -> MlpModel:
    """Glorot-uniform weights, zero biases; bit-identical for a fixed seed."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise BadArchitecture("need at least input and output layers")
    if any(s < 1 for s in sizes):
        raise BadArchitecture(f"layer sizes must be >= 1, got {sizes}")
    if activation not in ("relu", "tanh"):
        raise BadArchitecture(f"unknown activation: {activation!r}")
    if task not in ("classification", "regression"):
        raise BadArchitecture(f"unknown task: {task!r}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, weights, biases, activation, task, seed)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(z, 0.0) if kind == "relu" else np.tanh(z)


def _activate_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0).astype(float)
    return 1.0 - np.tanh(z) ** 2


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _as_batch(model: MlpModel, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.layer_sizes[0]:
        raise ShapeMismatch(f"expected input width {model.layer_sizes[0]}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("input contains NaN or infinity")
    return x, single


def forward_cached(model: MlpModel, x: np.ndarray) -> tuple[np.ndarray, list, list]:
    """Forward pass keeping pre-activations and activations for backprop."""
    a = x
    zs, activations = [], [a]
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        zs.append(z)
        if l < last:
            a = _activate(z, model.activation)
        elif model.task == "classification":
            a = softmax(z)
        else:
            a = z
        activations.append(a)
    return a, zs, activations


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Output activations; classification rows are probability vectors."""
    batch, single = _as_batch(model, x)
    out, _, _ = forward_cached(model, batch)
    return out[0] if single else out


def loss(pred: np.ndarray, target: np.ndarray, kind: str) -> float:
    """cross_entropy: -mean log p[true class], log argument clamped at 1e-12.
    mse: mean squared error over every output element."""
    pred = np.asarray(pred, dtype=float)
    if kind == "cross_entropy":
        target = np.asarray(target)
        if pred.ndim != 2 or target.ndim != 1 or pred.shape[0] != target.shape[0]:
            raise ShapeMismatch(f"pred {pred.shape} vs target {target.shape}")
        p = pred[np.arange(len(target)), target.astype(int)]
        return float(-np.mean(np.log(np.maximum(p, 1e-12))))
    if kind == "mse":
        target = np.asarray(target, dtype=float)
        if target.ndim == 1 and pred.ndim == 2 and pred.shape[1] == 1:
            target = target[:, None]
        if pred.shape != target.shape:
            raise ShapeMismatch(f"pred {pred.shape} vs target {target.shape}")
        return float(np.mean((pred - target) ** 2))
    raise ValueError(f"unknown loss kind: {kind!r}")


def _loss_kind(model: MlpModel) -> str:
    return "cross_entropy" if model.task == "classification" else "mse"


def _target_matrix(model: MlpModel, y: np.ndarray, n: int) -> np.ndarray:
    """Targets as an (n, k) array matching the output layer."""
    k = model.layer_sizes[-1]
    if model.task == "classification":
        y = np.asarray(y).astype(int)
        if y.ndim != 1 or y.shape[0] != n:
            raise ShapeMismatch(f"labels shape {y.shape} for batch of {n}")
        if y.min(initial=0) < 0 or y.max(initial=0) >= k:
            raise ShapeMismatch(f"labels must lie in [0, {k})")
        onehot = np.zeros((n, k))
        onehot[np.arange(n), y] = 1.0
        return onehot
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape != (n, k):
        raise ShapeMismatch(f"targets shape {y.shape}, expected {(n, k)}")
    return y


def grad(model: MlpModel, x: np.ndarray, y: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of the mean batch loss w.r.t. every weight and bias."""
    batch, _ = _as_batch(model, x)
    n = batch.shape[0]
    if n == 0:
        raise ShapeMismatch("batch must be nonempty")
    targets = _target_matrix(model, y, n)
    out, zs, activations = forward_cached(model, batch)

    if model.task == "classification":
        delta = (out - targets) / n  # softmax + cross-entropy
    else:
        delta = 2.0 * (out - targets) / targets.size  # identity + mse

    d_weights = [np.zeros_like(w) for w in model.weights]
    d_biases = [np.zeros_like(b) for b in model.biases]
    for l in range(len(model.weights) - 1, -1, -1):
        d_weights[l] = delta.T @ activations[l]
        d_biases[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ model.weights[l]) * _activate_grad(zs[l - 1], model.activation)
    return d_weights, d_biases


def grad_check(model: MlpModel, x: np.ndarray, y: np.ndarray, h: float = 1e-6) -> float:
    """Max relative error of analytic gradients against central finite
    differences, |a - n| / max(1e-8, |a| + |n|), over every parameter."""
    batch, _ = _as_batch(model, x)
    if batch.shape[0] == 0:
        raise ShapeMismatch("batch must be nonempty")
    kind = _loss_kind(model)
    targets = np.asarray(y)
    analytic_w, analytic_b = grad(model, batch, targets)

    def batch_loss() -> float:
        out, _, _ = forward_cached(model, batch)
        return loss(out, targets, kind)

    worst = 0.0
    for params, analytic in ((model.weights, analytic_w), (model.biases, analytic_b)):
        for arr, g in zip(params, analytic):
            flat, gflat = arr.ravel(), g.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                lp = batch_loss()
                flat[i] = orig - h
                lm = batch_loss()
                flat[i] = orig
                numeric = (lp - lm) / (2 * h)
                err = abs(gflat[i] - numeric) / max(1e-8, abs(gflat[i]) + abs(numeric))
                worst = max(worst, err)
    return worst


def train(
    model: MlpModel, x: np.ndarray, y: np.ndarray, cfg: TrainConfig
) -> tuple[MlpModel, list[float]]:
    """Minibatch SGD with momentum; returns (trained copy, per-epoch loss).

    Shuffling is driven solely by cfg.seed, so identical inputs give
    identical histories.
    """
    batch, _ = _as_batch(model, x)
    n = batch.shape[0]
    targets = np.asarray(y)
    if targets.shape[0] != n:
        raise ShapeMismatch(f"{targets.shape[0]} labels for {n} rows")
    kind = _loss_kind(model)
    trained = model.copy()
    vel_w = [np.zeros_like(w) for w in trained.weights]
    vel_b = [np.zeros_like(b) for b in trained.biases]
    rng = np.random.default_rng(cfg.seed)
    history: list[float] = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            gw, gb = grad(trained, batch[idx], targets[idx])
            for l in range(len(trained.weights)):
                vel_w[l] = cfg.momentum * vel_w[l] - cfg.learning_rate * gw[l]
                vel_b[l] = cfg.momentum * vel_b[l] - cfg.learning_rate * gb[l]
                trained.weights[l] += vel_w[l]
                trained.biases[l] += vel_b[l]
        out, _, _ = forward_cached(trained, batch)
        history.append(loss(out, targets, kind))
    return trained, history


def predict(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Class labels by argmax (ties to the lowest index) or raw values."""
    out = forward(model, x)
    if model.task == "classification":
        return np.argmax(np.atleast_2d(out), axis=1) if out.ndim > 1 else int(np.argmax(out))
    if out.ndim == 2 and out.shape[1] == 1:
        return out[:, 0]
    return out
