"""Checkpoint file format.

A checkpoint starts with the magic line ``LPCKPT1``, then a textual header of
``key = value`` lines terminated by one blank line, then the raw parameter
data as little-endian 64-bit floats:

    LPCKPT1
    name = mini_vgg
    input_shape = 32 32 3
    num_classes = 5
    layers = conv2d:16,3,1,1 relu ... dense:5 softmax
    epoch = 12
    history = 1.538291...:0.40625 0.88...:0.703125
    <blank line>
    <float64 little-endian parameter bytes>

Parameters are stored in layer order, weights before bias, each flattened
row-major. ``history`` is space-separated ``loss:accuracy`` pairs rendered
with repr(), so save/load round-trips are bit-exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ManifestFormatError, MissingInputError, StorageError
from .model import Checkpoint, ModelConfig, parameter_shapes, parse_layer_token

MAGIC = b"LPCKPT1\n"


def _header_lines(checkpoint: Checkpoint) -> list[str]:
    config = checkpoint.config
    history = " ".join(f"{repr(l)}:{repr(a)}" for l, a in checkpoint.history)
    return [
        f"name = {config.name}",
        f"input_shape = {' '.join(str(s) for s in config.input_shape)}",
        f"num_classes = {config.num_classes}",
        f"layers = {' '.join(spec.token() for spec in config.layers)}",
        f"epoch = {checkpoint.epoch}",
        f"history = {history}",
    ]


def save_checkpoint(checkpoint: Checkpoint, path: Path | str) -> None:
    header = "\n".join(_header_lines(checkpoint)) + "\n\n"
    flat = [
        np.ascontiguousarray(a, dtype="<f8").tobytes()
        for layer in checkpoint.parameters
        for a in layer
    ]
    try:
        Path(path).write_bytes(MAGIC + header.encode("utf-8") + b"".join(flat))
    except OSError as exc:
        raise StorageError(f"cannot write checkpoint {path}: {exc}") from exc


def _parse_header(lines: list[str], path: Path) -> dict[str, str]:
    values = {}
    for line in lines:
        key, sep, value = line.partition(" = ")
        if not sep:
            raise ManifestFormatError(f"{path}: bad checkpoint header line {line!r}")
        values[key] = value
    for required in ("name", "input_shape", "num_classes", "layers", "epoch", "history"):
        if required not in values:
            raise ManifestFormatError(f"{path}: checkpoint header missing {required!r}")
    return values


def load_checkpoint(path: Path | str) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"checkpoint not found: {path}")
    data = path.read_bytes()
    if not data.startswith(MAGIC):
        raise ManifestFormatError(f"{path}: not a checkpoint file (bad magic)")
    try:
        end = data.index(b"\n\n", len(MAGIC))
    except ValueError:
        raise ManifestFormatError(f"{path}: checkpoint header not terminated") from None
    header = data[len(MAGIC) : end].decode("utf-8")
    values = _parse_header(header.splitlines(), path)
    try:
        input_shape = tuple(int(s) for s in values["input_shape"].split())
        num_classes = int(values["num_classes"])
        epoch = int(values["epoch"])
        layer_specs = tuple(parse_layer_token(t) for t in values["layers"].split())
        history = tuple(
            (float(pair.split(":")[0]), float(pair.split(":")[1]))
            for pair in values["history"].split()
        )
    except (ValueError, IndexError) as exc:
        raise ManifestFormatError(f"{path}: bad checkpoint header field ({exc})") from exc
    if len(input_shape) != 3:
        raise ManifestFormatError(f"{path}: input_shape must have 3 entries")
    config = ModelConfig(values["name"], input_shape, num_classes, layer_specs)
    shapes = parameter_shapes(config)
    expected = sum(int(np.prod(s)) for layer in shapes for s in layer)
    raw = np.frombuffer(data[end + 2 :], dtype="<f8")
    if len(raw) != expected:
        raise ManifestFormatError(
            f"{path}: expected {expected} parameters, file holds {len(raw)}"
        )
    params = []
    offset = 0
    for layer_shapes in shapes:
        arrays = []
        for shape in layer_shapes:
            size = int(np.prod(shape))
            arrays.append(raw[offset : offset + size].reshape(shape).astype(np.float64))
            offset += size
        params.append(tuple(arrays))
    return Checkpoint(config=config, parameters=tuple(params), epoch=epoch, history=history)
