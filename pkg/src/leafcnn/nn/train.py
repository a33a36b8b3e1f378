"""Mini-batch SGD training with momentum, plus prediction helpers.

Training is bitwise deterministic for a fixed seed: initialization and the
per-epoch shuffle each consume their own xoshiro256** stream seeded with
``TrainConfig.seed``, batches are visited in shuffle order, and all math is
single-threaded float64 numpy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DivergedError, EmptyDatasetError, InvalidShapeError, ValidationError
from ..rng import Xoshiro256
from . import layers as L
from .model import Checkpoint, ModelConfig, backward_pass, forward_pass, init_parameters


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValidationError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValidationError(f"momentum must be in [0, 1), got {self.momentum}")


def sgd_step(
    parameters: np.ndarray,
    gradients: np.ndarray,
    velocity: np.ndarray,
    learning_rate: float,
    momentum: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One momentum update: v <- momentum*v - lr*g; p <- p + v."""
    p = np.asarray(parameters, dtype=np.float64)
    g = np.asarray(gradients, dtype=np.float64)
    v = np.asarray(velocity, dtype=np.float64)
    if p.shape != g.shape or p.shape != v.shape:
        raise InvalidShapeError(
            f"mismatched shapes: params {p.shape}, grads {g.shape}, velocity {v.shape}"
        )
    v_new = momentum * v - learning_rate * g
    return p + v_new, v_new


def _one_hot_rows(labels: np.ndarray, k: int) -> np.ndarray:
    rows = np.zeros((len(labels), k), dtype=np.float64)
    rows[np.arange(len(labels)), labels] = 1.0
    return rows


def train(
    config: ModelConfig,
    inputs: np.ndarray,
    labels: np.ndarray,
    train_cfg: TrainConfig,
) -> Checkpoint:
    """Train on preprocessed samples; returns a checkpoint with per-epoch history.

    ``inputs`` is (N, H, W, C) float64, ``labels`` is (N,) integer class
    indices. Each epoch records the mean per-sample cross-entropy and the
    accuracy measured on the shuffled pass, both computed before the batch's
    parameter update.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels)
    if len(inputs) == 0:
        raise EmptyDatasetError("training set is empty")
    if len(inputs) != len(labels):
        raise InvalidShapeError(f"{len(inputs)} inputs vs {len(labels)} labels")
    if tuple(inputs.shape[1:]) != tuple(config.input_shape):
        raise InvalidShapeError(
            f"sample shape {inputs.shape[1:]} does not match model input {config.input_shape}"
        )
    k = config.num_classes
    if labels.min() < 0 or labels.max() >= k:
        raise InvalidShapeError(f"labels outside [0, {k})")

    checkpoint = init_parameters(config, train_cfg.seed)
    params = [tuple(np.array(a) for a in layer) for layer in checkpoint.parameters]
    velocity = [tuple(np.zeros_like(a) for a in layer) for layer in params]
    rng = Xoshiro256(train_cfg.seed)
    n = len(inputs)
    history = []
    for epoch in range(1, train_cfg.epochs + 1):
        order = list(range(n))
        rng.shuffle(order)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, train_cfg.batch_size):
            batch = order[start : start + train_cfg.batch_size]
            xb = inputs[batch]
            yb = labels[batch]
            targets = _one_hot_rows(yb, k)
            probs, caches = forward_pass(config, params, xb, want_caches=True)
            losses = L.cross_entropy(probs, targets)
            batch_loss = float(np.sum(losses))
            if not np.isfinite(batch_loss):
                raise DivergedError(f"loss became non-finite at epoch {epoch}")
            loss_sum += batch_loss
            correct += int(np.sum(probs.argmax(axis=1) == yb))
            grad_logits = (probs - targets) / len(batch)
            grads = backward_pass(config, params, caches, grad_logits)
            for i, layer_grads in enumerate(grads):
                if not layer_grads:
                    continue
                updated = []
                new_velocity = []
                for p, g, v in zip(params[i], layer_grads, velocity[i]):
                    p_new, v_new = sgd_step(
                        p, g, v, train_cfg.learning_rate, train_cfg.momentum
                    )
                    updated.append(p_new)
                    new_velocity.append(v_new)
                params[i] = tuple(updated)
                velocity[i] = tuple(new_velocity)
        history.append((loss_sum / n, correct / n))
    return Checkpoint(
        config=config,
        parameters=tuple(tuple(a for a in layer) for layer in params),
        epoch=train_cfg.epochs,
        history=tuple(history),
    )


def predict(checkpoint: Checkpoint, sample: np.ndarray) -> tuple[int, np.ndarray]:
    """Forward one preprocessed sample; returns (argmax class, probability vector).

    Argmax ties go to the lowest class index.
    """
    x = np.asarray(sample, dtype=np.float64)
    if tuple(x.shape) != tuple(checkpoint.config.input_shape):
        raise InvalidShapeError(
            f"sample shape {x.shape} does not match model input {checkpoint.config.input_shape}"
        )
    probs = forward_pass(checkpoint.config, checkpoint.parameters, x[None])[0]
    return int(probs.argmax()), probs


def predict_batch(checkpoint: Checkpoint, inputs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward a batch (N, H, W, C); returns (argmax classes, probability rows)."""
    x = np.asarray(inputs, dtype=np.float64)
    if tuple(x.shape[1:]) != tuple(checkpoint.config.input_shape):
        raise InvalidShapeError(
            f"batch shape {x.shape[1:]} does not match model input {checkpoint.config.input_shape}"
        )
    probs = forward_pass(checkpoint.config, checkpoint.parameters, x)
    return probs.argmax(axis=1), probs
