"""Image decoding and encoding.

PPM (P6, 8-bit) is read and written natively so the binary format is stable
down to the byte; PNG and JPEG are decoded through Pillow. All images are
numpy uint8 arrays of shape (height, width, channels) with channels 1, 3
or 4.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(data):
        c = data[pos : pos + 1]
        if c in _WHITESPACE:
            pos += 1
        elif c == b"#":
            while pos < len(data) and data[pos : pos + 1] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and data[pos : pos + 1] not in _WHITESPACE:
        pos += 1
    if start == pos:
        raise DecodeError("truncated PPM header")
    return data[start:pos], pos


def read_ppm(path: Path | str) -> np.ndarray:
    """Decode a binary P6 PPM with maxval 255 into a (H, W, 3) uint8 array."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P6"):
        raise DecodeError(f"{path}: not a P6 PPM")
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _next_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise DecodeError(f"{path}: non-numeric PPM header field {token!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise DecodeError(f"{path}: bad PPM dimensions {width}x{height}")
    if maxval != 255:
        raise DecodeError(f"{path}: only 8-bit PPM supported, maxval was {maxval}")
    pos += 1  # single whitespace byte after maxval
    expected = height * width * 3
    pixels = data[pos : pos + expected]
    if len(pixels) < expected:
        raise DecodeError(f"{path}: PPM pixel data truncated")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(path: Path | str, pixels: np.ndarray) -> None:
    """Write a (H, W, 3) uint8 array as a canonical binary P6 PPM."""
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ValueError(f"expected (H, W, 3) uint8 pixels, got {arr.shape} {arr.dtype}")
    height, width = arr.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + arr.tobytes())


def load_image(path: Path | str) -> np.ndarray:
    """Decode any supported image file into a (H, W, C) uint8 array, C in {1, 3, 4}."""
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        return read_ppm(path)
    try:
        with Image.open(path) as img:
            if img.mode == "L":
                arr = np.asarray(img)[:, :, None]
            elif img.mode in ("RGB", "RGBA"):
                arr = np.asarray(img)
            elif img.mode in ("P", "LA", "PA"):
                arr = np.asarray(img.convert("RGBA"))
            else:
                arr = np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"{path}: cannot decode image ({exc})") from exc
    return np.ascontiguousarray(arr, dtype=np.uint8)
