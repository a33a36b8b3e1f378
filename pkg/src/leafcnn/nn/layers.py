"""Layer primitives: forward passes and their exact gradients.

Tensors are numpy float64 arrays. Images are channels-last, (H, W, C) for a
single sample or (N, H, W, C) batched; every primitive accepts either and
returns the same batchness. Convolution weights have shape
(kernel_h, kernel_w, in_channels, out_channels), dense weights
(out_features, in_features).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import InvalidShapeError

CROSS_ENTROPY_CLAMP = 1e-12


def _as_batch(x: np.ndarray, ndim: int) -> tuple[np.ndarray, bool]:
    if x.ndim == ndim:
        return x[None], True
    if x.ndim == ndim + 1:
        return x, False
    raise InvalidShapeError(f"expected {ndim}D or {ndim + 1}D input, got shape {x.shape}")


def _conv_patches(xp: np.ndarray, kh: int, kw: int, stride: int) -> tuple[np.ndarray, int, int]:
    """im2col: (N, Hp, Wp, C) -> ((N*Ho*Wo, kh*kw*C) patches, Ho, Wo) with
    (di, dj, c) ordering inside each patch row."""
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    n, ho, wo, c = windows.shape[:4]
    return windows.transpose(0, 1, 2, 4, 5, 3).reshape(n * ho * wo, kh * kw * c), ho, wo


def conv2d_forward(
    x: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray,
    stride: int = 1,
    padding: int = 0,
) -> np.ndarray:
    """Cross-correlation with zero padding.

    out[i, j, o] = bias[o] + sum_{di, dj, c} in[i*s + di - p, j*s + dj - p, c]
                                             * weights[di, dj, c, o]
    Output spatial size is floor((H + 2p - k) / s) + 1.
    """
    xb, squeeze = _as_batch(np.asarray(x, dtype=np.float64), 3)
    kh, kw, cin, cout = weights.shape
    if xb.shape[3] != cin:
        raise InvalidShapeError(f"input has {xb.shape[3]} channels, weights expect {cin}")
    if stride < 1:
        raise InvalidShapeError(f"stride must be >= 1, got {stride}")
    if padding:
        xb = np.pad(xb, ((0, 0), (padding, padding), (padding, padding), (0, 0)))
    if kh > xb.shape[1] or kw > xb.shape[2]:
        raise InvalidShapeError(
            f"kernel {kh}x{kw} larger than padded input {xb.shape[1]}x{xb.shape[2]}"
        )
    patches, ho, wo = _conv_patches(xb, kh, kw, stride)
    out = patches @ weights.reshape(kh * kw * cin, cout) + bias
    out = out.reshape(len(xb), ho, wo, cout)
    return out[0] if squeeze else out


def conv2d_backward(
    grad_out: np.ndarray,
    x: np.ndarray,
    weights: np.ndarray,
    stride: int = 1,
    padding: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of conv2d_forward with respect to input, weights and bias."""
    xb, squeeze = _as_batch(np.asarray(x, dtype=np.float64), 3)
    gb, _ = _as_batch(np.asarray(grad_out, dtype=np.float64), 3)
    kh, kw, cin, cout = weights.shape
    if gb.shape[3] != cout or len(gb) != len(xb):
        raise InvalidShapeError(
            f"grad_out shape {gb.shape} inconsistent with weights {weights.shape}"
        )
    if padding:
        xp = np.pad(xb, ((0, 0), (padding, padding), (padding, padding), (0, 0)))
    else:
        xp = xb
    n, ho, wo = gb.shape[:3]
    patches, ho_x, wo_x = _conv_patches(xp, kh, kw, stride)
    if (ho_x, wo_x) != (ho, wo):
        raise InvalidShapeError(
            f"grad_out spatial {ho}x{wo} does not match forward output {ho_x}x{wo_x}"
        )
    go = gb.reshape(n * ho * wo, cout)
    grad_bias = go.sum(axis=0)
    grad_weights = (patches.T @ go).reshape(kh, kw, cin, cout)
    dcols = (go @ weights.reshape(kh * kw * cin, cout).T).reshape(n, ho, wo, kh, kw, cin)
    grad_xp = np.zeros_like(xp)
    for di in range(kh):
        for dj in range(kw):
            grad_xp[
                :,
                di : di + (ho - 1) * stride + 1 : stride,
                dj : dj + (wo - 1) * stride + 1 : stride,
                :,
            ] += dcols[:, :, :, di, dj, :]
    if padding:
        grad_x = grad_xp[:, padding:-padding, padding:-padding, :]
    else:
        grad_x = grad_xp
    if squeeze:
        grad_x = grad_x[0]
    return grad_x, grad_weights, grad_bias


def maxpool2d_forward(
    x: np.ndarray, window: int, stride: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Channel-wise max over window x window patches; ties go to the first
    position in row-major scan order. Returns (output, argmax indices)."""
    stride = window if stride is None else stride
    xb, squeeze = _as_batch(np.asarray(x, dtype=np.float64), 3)
    n, h, w, c = xb.shape
    if window > h or window > w:
        raise InvalidShapeError(f"pool window {window} exceeds input {h}x{w}")
    if stride < 1:
        raise InvalidShapeError(f"stride must be >= 1, got {stride}")
    windows = sliding_window_view(xb, (window, window), axis=(1, 2))[:, ::stride, ::stride]
    ho, wo = windows.shape[1:3]
    flat = windows.reshape(n, ho, wo, c, window * window)
    argmax = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, argmax[..., None], axis=-1)[..., 0]
    if squeeze:
        return out[0], argmax[0]
    return out, argmax


def maxpool2d_backward(
    grad_out: np.ndarray,
    argmax: np.ndarray,
    input_shape: tuple[int, ...],
    window: int,
    stride: int | None = None,
) -> np.ndarray:
    """Route each output gradient to its window's argmax position."""
    stride = window if stride is None else stride
    gb, squeeze = _as_batch(np.asarray(grad_out, dtype=np.float64), 3)
    ab = argmax[None] if argmax.ndim == 3 else argmax
    n, ho, wo, c = gb.shape
    full_shape = (n,) + tuple(input_shape[-3:])
    grad_x = np.zeros(full_shape, dtype=np.float64)
    di = ab // window
    dj = ab % window
    n_idx = np.arange(n)[:, None, None, None]
    y_idx = np.arange(ho)[None, :, None, None] * stride + di
    x_idx = np.arange(wo)[None, None, :, None] * stride + dj
    c_idx = np.arange(c)[None, None, None, :]
    np.add.at(grad_x, (n_idx, y_idx, x_idx, c_idx), gb)
    return grad_x[0] if squeeze else grad_x


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, np.asarray(x, dtype=np.float64))


def relu_backward(grad_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Mask gradients where the input was <= 0 (derivative at 0 is 0)."""
    return np.asarray(grad_out, dtype=np.float64) * (np.asarray(x) > 0)


def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """out = weights @ x + bias, with weights shaped (out_features, in_features)."""
    xb, squeeze = _as_batch(np.asarray(x, dtype=np.float64), 1)
    if xb.shape[1] != weights.shape[1]:
        raise InvalidShapeError(
            f"input length {xb.shape[1]} does not match weight fan-in {weights.shape[1]}"
        )
    out = xb @ weights.T + bias
    return out[0] if squeeze else out


def dense_backward(
    grad_out: np.ndarray, x: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of dense_forward with respect to input, weights and bias."""
    xb, squeeze = _as_batch(np.asarray(x, dtype=np.float64), 1)
    gb, _ = _as_batch(np.asarray(grad_out, dtype=np.float64), 1)
    if gb.shape[1] != weights.shape[0] or len(gb) != len(xb):
        raise InvalidShapeError(
            f"grad_out shape {gb.shape} inconsistent with weights {weights.shape}"
        )
    grad_weights = gb.T @ xb
    grad_bias = gb.sum(axis=0)
    grad_x = gb @ weights
    return (grad_x[0] if squeeze else grad_x), grad_weights, grad_bias


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax over the last axis: exp(x - max) normalized to sum 1."""
    arr = np.asarray(logits, dtype=np.float64)
    shifted = arr - arr.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(grad_out: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Jacobian-vector product: p * (g - sum(g * p))."""
    g = np.asarray(grad_out, dtype=np.float64)
    p = np.asarray(probs, dtype=np.float64)
    return p * (g - (g * p).sum(axis=-1, keepdims=True))


def cross_entropy(probabilities: np.ndarray, one_hot_target: np.ndarray) -> np.ndarray | float:
    """-ln(p_target) with p clamped to >= 1e-12; elementwise over a batch."""
    p = np.asarray(probabilities, dtype=np.float64)
    t = np.asarray(one_hot_target, dtype=np.float64)
    if p.shape != t.shape:
        raise InvalidShapeError(f"probabilities {p.shape} vs target {t.shape}")
    p_target = (p * t).sum(axis=-1)
    loss = -np.log(np.maximum(p_target, CROSS_ENTROPY_CLAMP))
    return float(loss) if loss.ndim == 0 else loss


def cross_entropy_backward(probabilities: np.ndarray, one_hot_target: np.ndarray) -> np.ndarray:
    """Gradient of cross_entropy with respect to the probability vector."""
    p = np.asarray(probabilities, dtype=np.float64)
    t = np.asarray(one_hot_target, dtype=np.float64)
    return -t / np.maximum(p, CROSS_ENTROPY_CLAMP)
