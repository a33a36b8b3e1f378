"""Finite-difference verification of every backward pass.

For each parameter of a (small) model the analytic gradient of the
cross-entropy loss is compared against the central difference
(L(p + eps) - L(p - eps)) / (2 eps). Intended for configurations of at most
a few thousand parameters; each probe costs two forward passes.
"""

from __future__ import annotations

import numpy as np

from . import layers as L
from .model import ModelConfig, backward_pass, forward_pass, init_parameters

REL_ERROR_FLOOR = 1e-8


def gradient_check(
    config: ModelConfig,
    sample: tuple[np.ndarray, np.ndarray],
    epsilon: float = 1e-5,
    seed: int = 0,
) -> float:
    """Maximum relative gradient error over all parameters.

    ``sample`` is (input, one_hot_target). The relative error for one
    parameter uses denominator max(|analytic|, |numeric|, 1e-8).
    """
    x, target = sample
    x = np.asarray(x, dtype=np.float64)[None]
    target = np.asarray(target, dtype=np.float64)
    params = [
        tuple(np.array(a) for a in layer)
        for layer in init_parameters(config, seed).parameters
    ]

    def loss() -> float:
        probs = forward_pass(config, params, x)
        return float(L.cross_entropy(probs[0], target))

    probs, caches = forward_pass(config, params, x, want_caches=True)
    analytic = backward_pass(config, params, caches, (probs - target[None]))

    max_rel = 0.0
    for layer_params, layer_grads in zip(params, analytic):
        for arr, grad in zip(layer_params, layer_grads):
            flat = arr.reshape(-1)
            grad_flat = np.asarray(grad).reshape(-1)
            for idx in range(flat.size):
                original = flat[idx]
                flat[idx] = original + epsilon
                loss_plus = loss()
                flat[idx] = original - epsilon
                loss_minus = loss()
                flat[idx] = original
                numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
                a = grad_flat[idx]
                rel = abs(a - numeric) / max(abs(a), abs(numeric), REL_ERROR_FLOOR)
                if rel > max_rel:
                    max_rel = rel
    return max_rel
