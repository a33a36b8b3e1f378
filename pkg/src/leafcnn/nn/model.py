"""Model configuration, shape checking, initialization and the forward/backward engine.

Architectures are flat stacks drawn from a small layer vocabulary
(conv2d, maxpool2d, relu, flatten, dense, softmax). Two presets are built in:

* ``mini_vgg`` - two conv-relu-conv-relu-pool blocks (16 and 32 channels)
  plus dense-128 and a dense classifier head, sized for 32x32 training runs.
* ``vgg16_shape`` - the classic 13-conv/3-dense layout at 224x224, intended
  for shape checking and parameter counting, not desk-scale training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArchitectureError
from ..rng import Xoshiro256
from . import layers as L

KINDS = ("conv2d", "maxpool2d", "relu", "flatten", "dense", "softmax")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    out_channels: int = 0
    kernel: int = 0
    stride: int = 1
    padding: int = 0
    window: int = 0
    out_features: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArchitectureError(f"unknown layer kind {self.kind!r}")

    def token(self) -> str:
        """Compact text form used in checkpoint headers."""
        if self.kind == "conv2d":
            return f"conv2d:{self.out_channels},{self.kernel},{self.stride},{self.padding}"
        if self.kind == "maxpool2d":
            return f"maxpool2d:{self.window},{self.stride}"
        if self.kind == "dense":
            return f"dense:{self.out_features}"
        return self.kind


def conv2d(out_channels: int, kernel: int, stride: int = 1, padding: int = 0) -> LayerSpec:
    if out_channels < 1 or kernel < 1 or stride < 1 or padding < 0:
        raise InvalidArchitectureError(
            f"bad conv2d parameters ({out_channels}, {kernel}, {stride}, {padding})"
        )
    return LayerSpec("conv2d", out_channels=out_channels, kernel=kernel, stride=stride, padding=padding)


def maxpool2d(window: int, stride: int | None = None) -> LayerSpec:
    stride = window if stride is None else stride
    if window < 1 or stride < 1:
        raise InvalidArchitectureError(f"bad maxpool2d parameters ({window}, {stride})")
    return LayerSpec("maxpool2d", window=window, stride=stride)


def relu_spec() -> LayerSpec:
    return LayerSpec("relu")


def flatten() -> LayerSpec:
    return LayerSpec("flatten")


def dense(out_features: int) -> LayerSpec:
    if out_features < 1:
        raise InvalidArchitectureError(f"dense out_features must be >= 1, got {out_features}")
    return LayerSpec("dense", out_features=out_features)


def softmax_spec() -> LayerSpec:
    return LayerSpec("softmax")


def parse_layer_token(token: str) -> LayerSpec:
    kind, _, argtext = token.partition(":")
    try:
        args = [int(a) for a in argtext.split(",")] if argtext else []
        if kind == "conv2d":
            return conv2d(*args)
        if kind == "maxpool2d":
            return maxpool2d(*args)
        if kind == "dense":
            return dense(*args)
        if kind in ("relu", "flatten", "softmax") and not args:
            return LayerSpec(kind)
    except (TypeError, ValueError):
        pass
    raise InvalidArchitectureError(f"cannot parse layer token {token!r}")


@dataclass(frozen=True)
class ModelConfig:
    name: str
    input_shape: tuple[int, int, int]
    num_classes: int
    layers: tuple[LayerSpec, ...]


@dataclass(frozen=True)
class Checkpoint:
    """A model plus its parameters: per layer, a tuple of (weights, bias) or ()."""

    config: ModelConfig
    parameters: tuple[tuple[np.ndarray, ...], ...]
    epoch: int = 0
    history: tuple[tuple[float, float], ...] = ()  # (mean loss, accuracy) per epoch


def infer_shapes(config: ModelConfig) -> list[tuple[int, ...]]:
    """Per-layer output shapes; raises InvalidArchitectureError if the stack
    does not compose or the final layer is not softmax over num_classes."""
    shape: tuple[int, ...] = tuple(config.input_shape)
    if len(shape) != 3 or any(s < 1 for s in shape):
        raise InvalidArchitectureError(f"bad input shape {shape}")
    if not config.layers:
        raise InvalidArchitectureError("model has no layers")
    shapes = []
    for i, spec in enumerate(config.layers):
        where = f"layer {i} ({spec.token()})"
        if spec.kind == "conv2d":
            if len(shape) != 3:
                raise InvalidArchitectureError(f"{where}: needs a 3D input, got {shape}")
            h, w, _ = shape
            hp, wp = h + 2 * spec.padding, w + 2 * spec.padding
            if spec.kernel > hp or spec.kernel > wp:
                raise InvalidArchitectureError(f"{where}: kernel exceeds padded input {hp}x{wp}")
            shape = (
                (hp - spec.kernel) // spec.stride + 1,
                (wp - spec.kernel) // spec.stride + 1,
                spec.out_channels,
            )
        elif spec.kind == "maxpool2d":
            if len(shape) != 3:
                raise InvalidArchitectureError(f"{where}: needs a 3D input, got {shape}")
            h, w, c = shape
            if spec.window > h or spec.window > w:
                raise InvalidArchitectureError(f"{where}: window exceeds input {h}x{w}")
            shape = ((h - spec.window) // spec.stride + 1, (w - spec.window) // spec.stride + 1, c)
        elif spec.kind == "relu":
            pass
        elif spec.kind == "flatten":
            shape = (int(np.prod(shape)),)
        elif spec.kind == "dense":
            if len(shape) != 1:
                raise InvalidArchitectureError(f"{where}: needs a flat input, got {shape}")
            shape = (spec.out_features,)
        elif spec.kind == "softmax":
            if len(shape) != 1:
                raise InvalidArchitectureError(f"{where}: needs a flat input, got {shape}")
        if any(s < 1 for s in shape):
            raise InvalidArchitectureError(f"{where}: produces empty shape {shape}")
        shapes.append(shape)
    if config.layers[-1].kind != "softmax":
        raise InvalidArchitectureError("final layer must be softmax")
    if shapes[-1] != (config.num_classes,):
        raise InvalidArchitectureError(
            f"final output {shapes[-1]} does not match num_classes {config.num_classes}"
        )
    return shapes


def parameter_shapes(config: ModelConfig) -> list[tuple[tuple[int, ...], ...]]:
    """Per layer, the shapes of its (weights, bias) arrays; () for stateless layers."""
    shapes = infer_shapes(config)
    result: list[tuple[tuple[int, ...], ...]] = []
    shape: tuple[int, ...] = tuple(config.input_shape)
    for spec, out_shape in zip(config.layers, shapes):
        if spec.kind == "conv2d":
            cin = shape[2]
            result.append(((spec.kernel, spec.kernel, cin, spec.out_channels), (spec.out_channels,)))
        elif spec.kind == "dense":
            result.append(((spec.out_features, shape[0]), (spec.out_features,)))
        else:
            result.append(())
        shape = out_shape
    return result


def num_parameters(config: ModelConfig) -> int:
    return sum(
        int(np.prod(s)) for layer in parameter_shapes(config) for s in layer
    )


def init_parameters(config: ModelConfig, seed: int) -> Checkpoint:
    """He-style scaled-uniform initialization, deterministic per seed.

    Weights are uniform on [-limit, limit] with limit = sqrt(6 / fan_in)
    (variance 2 / fan_in); biases start at zero. Layers are initialized in
    order from a single xoshiro256** stream seeded with ``seed``.
    """
    shapes = parameter_shapes(config)
    rng = Xoshiro256(seed)
    params = []
    for layer_shapes, spec in zip(shapes, config.layers):
        if not layer_shapes:
            params.append(())
            continue
        w_shape, b_shape = layer_shapes
        if spec.kind == "conv2d":
            fan_in = w_shape[0] * w_shape[1] * w_shape[2]
        else:
            fan_in = w_shape[1]
        limit = math.sqrt(6.0 / fan_in)
        u = rng.next_floats(int(np.prod(w_shape)))
        weights = ((2.0 * u - 1.0) * limit).reshape(w_shape)
        params.append((weights, np.zeros(b_shape, dtype=np.float64)))
    return Checkpoint(config=config, parameters=tuple(params), epoch=0, history=())


def mini_vgg(
    input_shape: tuple[int, int, int] = (32, 32, 3),
    num_classes: int = 5,
    name: str = "mini_vgg",
) -> ModelConfig:
    specs = []
    for channels in (16, 32):
        specs += [
            conv2d(channels, 3, padding=1),
            relu_spec(),
            conv2d(channels, 3, padding=1),
            relu_spec(),
            maxpool2d(2),
        ]
    specs += [flatten(), dense(128), relu_spec(), dense(num_classes), softmax_spec()]
    config = ModelConfig(name, input_shape, num_classes, tuple(specs))
    infer_shapes(config)
    return config


def vgg16_shape(
    input_shape: tuple[int, int, int] = (224, 224, 3),
    num_classes: int = 5,
    name: str = "vgg16_shape",
) -> ModelConfig:
    blocks = ((64, 64), (128, 128), (256, 256, 256), (512, 512, 512), (512, 512, 512))
    specs = []
    for block in blocks:
        for channels in block:
            specs += [conv2d(channels, 3, padding=1), relu_spec()]
        specs.append(maxpool2d(2))
    specs += [
        flatten(),
        dense(4096),
        relu_spec(),
        dense(4096),
        relu_spec(),
        dense(num_classes),
        softmax_spec(),
    ]
    config = ModelConfig(name, input_shape, num_classes, tuple(specs))
    infer_shapes(config)
    return config


PRESETS = {"mini_vgg": mini_vgg, "vgg16_shape": vgg16_shape}


def build_preset(
    preset: str,
    input_shape: tuple[int, int, int],
    num_classes: int,
    name: str | None = None,
) -> ModelConfig:
    if preset not in PRESETS:
        raise InvalidArchitectureError(
            f"unknown preset {preset!r}; available: {sorted(PRESETS)}"
        )
    return PRESETS[preset](input_shape, num_classes, name=name or preset)


def forward_pass(
    config: ModelConfig,
    params: tuple[tuple[np.ndarray, ...], ...],
    x: np.ndarray,
    want_caches: bool = False,
):
    """Run a batch (N, H, W, C) through the stack; returns class probabilities
    of shape (N, num_classes), plus per-layer caches when requested."""
    h = np.asarray(x, dtype=np.float64)
    caches: list = []
    for spec, layer_params in zip(config.layers, params):
        if spec.kind == "conv2d":
            caches.append(h)
            h = L.conv2d_forward(h, layer_params[0], layer_params[1], spec.stride, spec.padding)
        elif spec.kind == "maxpool2d":
            shape = h.shape
            h, argmax = L.maxpool2d_forward(h, spec.window, spec.stride)
            caches.append((argmax, shape))
        elif spec.kind == "relu":
            caches.append(h)
            h = L.relu(h)
        elif spec.kind == "flatten":
            caches.append(h.shape)
            h = h.reshape(len(h), -1)
        elif spec.kind == "dense":
            caches.append(h)
            h = L.dense_forward(h, layer_params[0], layer_params[1])
        else:  # softmax
            caches.append(None)
            h = L.softmax(h)
    if want_caches:
        return h, caches
    return h


def backward_pass(
    config: ModelConfig,
    params: tuple[tuple[np.ndarray, ...], ...],
    caches: list,
    grad_logits: np.ndarray,
) -> list[tuple[np.ndarray, ...]]:
    """Backpropagate from the softmax input (the fused softmax/cross-entropy
    seam) down the stack; returns per-layer parameter gradients."""
    if config.layers[-1].kind != "softmax":
        raise InvalidArchitectureError("backward_pass expects a softmax-terminated stack")
    grads: list[tuple[np.ndarray, ...]] = [() for _ in config.layers]
    g = np.asarray(grad_logits, dtype=np.float64)
    for i in range(len(config.layers) - 2, -1, -1):
        spec = config.layers[i]
        if spec.kind == "conv2d":
            g, gw, gb = L.conv2d_backward(g, caches[i], params[i][0], spec.stride, spec.padding)
            grads[i] = (gw, gb)
        elif spec.kind == "maxpool2d":
            argmax, in_shape = caches[i]
            g = L.maxpool2d_backward(g, argmax, in_shape, spec.window, spec.stride)
        elif spec.kind == "relu":
            g = L.relu_backward(g, caches[i])
        elif spec.kind == "flatten":
            g = g.reshape(caches[i])
        elif spec.kind == "dense":
            g, gw, gb = L.dense_backward(g, caches[i], params[i][0])
            grads[i] = (gw, gb)
    return grads
