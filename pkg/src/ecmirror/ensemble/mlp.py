"""Small tanh MLP trained by full-batch gradient descent with momentum.

Hidden layers apply tanh, the output layer is identity. The training loss is
mean squared error plus alpha/2 times the squared Frobenius norms of the
weight matrices (biases unpenalized). Initialization is seedable uniform
scaled by 1/sqrt(fan_in), so identical seeds give bit-identical models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the epoch at which it happened."""

    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class MlpHyperparams:
    hidden_layer_sizes: tuple[int, ...] = (100,)
    activation: str = "tanh"
    alpha: float = 0.001
    learning_rate: float = 0.05
    momentum: float = 0.9
    max_epochs: int = 2000
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.activation != "tanh":
            raise ValueError(f"unsupported activation {self.activation!r}")
        if self.alpha < 0.0:
            raise ValueError("alpha must be >= 0")


@dataclass
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "tanh"
    alpha: float = 0.001

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0], *(w.shape[1] for w in self.weights))

    def copy(self) -> "MlpModel":
        return MlpModel(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
            alpha=self.alpha,
        )


def init_mlp(layer_sizes, hp: MlpHyperparams = MlpHyperparams()) -> MlpModel:
    rng = np.random.default_rng(hp.seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights=weights, biases=biases, activation=hp.activation, alpha=hp.alpha)


def mlp_forward(model: MlpModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    z = X
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = z @ w + b
        if i < last:
            z = np.tanh(z)
    return z[:, 0]


def _forward_states(model: MlpModel, X: np.ndarray) -> list[np.ndarray]:
    states = [X]
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = states[-1] @ w + b
        if i < last:
            z = np.tanh(z)
        states.append(z)
    return states


def mlp_loss(model: MlpModel, X, y) -> float:
    pred = mlp_forward(model, X)
    penalty = 0.5 * model.alpha * sum(float(np.sum(w * w)) for w in model.weights)
    return float(np.mean((pred - np.asarray(y)) ** 2)) + penalty


def mlp_loss_and_grads(model: MlpModel, X, y):
    """Backpropagated gradients of the regularized loss."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n = len(y)
    states = _forward_states(model, X)
    pred = states[-1][:, 0]

    penalty = 0.5 * model.alpha * sum(float(np.sum(w * w)) for w in model.weights)
    loss = float(np.mean((pred - y) ** 2)) + penalty

    grad_w = [np.empty_like(w) for w in model.weights]
    grad_b = [np.empty_like(b) for b in model.biases]
    delta = (2.0 / n) * (pred - y)[:, None]
    for i in range(len(model.weights) - 1, -1, -1):
        grad_w[i] = states[i].T @ delta + model.alpha * model.weights[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (1.0 - states[i] ** 2)
    return loss, grad_w, grad_b


def mlp_train(model: MlpModel, X, y, hp: MlpHyperparams) -> MlpModel:
    """Continue gradient-descent training from the given parameters."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise ValueError(f"need at least 2 samples, got {len(y)}")

    model = model.copy()
    model.alpha = hp.alpha
    vel_w = [np.zeros_like(w) for w in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    prev_loss = np.inf
    for epoch in range(hp.max_epochs):
        loss, grad_w, grad_b = mlp_loss_and_grads(model, X, y)
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch)
        if abs(prev_loss - loss) < hp.tol:
            break
        prev_loss = loss
        for i in range(len(model.weights)):
            vel_w[i] = hp.momentum * vel_w[i] - hp.learning_rate * grad_w[i]
            vel_b[i] = hp.momentum * vel_b[i] - hp.learning_rate * grad_b[i]
            model.weights[i] += vel_w[i]
            model.biases[i] += vel_b[i]
    return model


def mlp_fit(X, y, hp: MlpHyperparams = MlpHyperparams()) -> MlpModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    model = init_mlp((X.shape[1], *hp.hidden_layer_sizes, 1), hp)
    return mlp_train(model, X, y, hp)
