"""Four-stage image preprocessing: RGB conversion, denoising, resize, rescale.

The pipeline turns a raw uint8 image of 1, 3 or 4 channels into a float64
tensor of shape (target_height, target_width, 3) with every value inside
[n_min, n_max]:

    to_rgb -> median_filter -> resize_bilinear -> min_max_normalize

All stages are pure functions; images may be processed in parallel.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    EmptyInputError,
    InvalidKernelError,
    InvalidRangeError,
    InvalidSizeError,
    UnsupportedFormatError,
)


@dataclass(frozen=True)
class PreprocessConfig:
    target_height: int = 224
    target_width: int = 224
    filter_kernel: int = 3
    n_min: float = 0.0
    n_max: float = 1.0

    def __post_init__(self):
        if self.target_height < 1 or self.target_width < 1:
            raise InvalidSizeError(
                f"target size must be positive, got {self.target_height}x{self.target_width}"
            )
        if self.filter_kernel < 1 or self.filter_kernel % 2 == 0:
            raise InvalidKernelError(f"filter_kernel must be odd and >= 1, got {self.filter_kernel}")
        if self.n_max <= self.n_min:
            raise InvalidRangeError(f"need n_max > n_min, got [{self.n_min}, {self.n_max}]")


def to_rgb(image: np.ndarray) -> np.ndarray:
    """Convert a (H, W, C) uint8 image to 3 channels.

    Grayscale is replicated into R=G=B; RGBA is alpha-composited over a white
    background with round-half-up, then the alpha channel is dropped; RGB
    passes through unchanged.
    """
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] not in (1, 3, 4):
        raise UnsupportedFormatError(
            f"expected (H, W, C) with C in {{1, 3, 4}}, got shape {arr.shape}"
        )
    if arr.shape[2] == 3:
        return arr.copy()
    if arr.shape[2] == 1:
        return np.repeat(arr, 3, axis=2)
    rgb = arr[:, :, :3].astype(np.uint32)
    alpha = arr[:, :, 3:4].astype(np.uint32)
    # round-half-up of (a*c + (255-a)*255) / 255, kept in exact integer arithmetic
    numerator = alpha * rgb + (255 - alpha) * 255
    return ((2 * numerator + 255) // 510).astype(np.uint8)


def median_filter(image: np.ndarray, kernel: int) -> np.ndarray:
    """Per-channel median over a kernel x kernel neighborhood, replicate padding."""
    arr = np.asarray(image)
    if arr.ndim != 3:
        raise UnsupportedFormatError(f"expected (H, W, C) image, got shape {arr.shape}")
    if kernel < 1 or kernel % 2 == 0:
        raise InvalidKernelError(f"kernel must be odd and >= 1, got {kernel}")
    h, w, c = arr.shape
    if kernel > min(h, w):
        raise InvalidKernelError(f"kernel {kernel} exceeds image size {h}x{w}")
    if kernel == 1:
        return arr.copy()
    pad = kernel // 2
    padded = np.pad(arr, ((pad, pad), (pad, pad), (0, 0)), mode="edge")
    windows = sliding_window_view(padded, (kernel, kernel), axis=(0, 1))
    med = np.median(windows.reshape(h, w, c, kernel * kernel), axis=-1)
    return med.astype(arr.dtype)


def resize_bilinear(image: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel center alignment and round-half-up output.

    Source coordinate for destination index d is (d + 0.5) * src/dst - 0.5,
    clamped into the image. Resizing to the source size is the identity.
    """
    arr = np.asarray(image)
    if arr.ndim != 3:
        raise UnsupportedFormatError(f"expected (H, W, C) image, got shape {arr.shape}")
    if target_h < 1 or target_w < 1:
        raise InvalidSizeError(f"target size must be positive, got {target_h}x{target_w}")
    h, w, _ = arr.shape
    if (target_h, target_w) == (h, w):
        return arr.copy()
    sy = np.clip((np.arange(target_h) + 0.5) * (h / target_h) - 0.5, 0.0, h - 1.0)
    sx = np.clip((np.arange(target_w) + 0.5) * (w / target_w) - 0.5, 0.0, w - 1.0)
    y0 = np.floor(sy).astype(np.intp)
    x0 = np.floor(sx).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (sy - y0).reshape(-1, 1, 1)
    wx = (sx - x0).reshape(1, -1, 1)
    img = arr.astype(np.float64)
    top = img[y0][:, x0] * (1.0 - wx) + img[y0][:, x1] * wx
    bottom = img[y1][:, x0] * (1.0 - wx) + img[y1][:, x1] * wx
    out = top * (1.0 - wy) + bottom * wy
    return np.clip(np.floor(out + 0.5), 0.0, 255.0).astype(np.uint8)


def min_max_normalize(values: np.ndarray, n_min: float = 0.0, n_max: float = 1.0) -> np.ndarray:
    """Affine rescale of a tensor into [n_min, n_max] by its global min and max.

    The minimum element maps to n_min and the maximum to n_max; a constant
    tensor (max == min) maps to all n_min, keeping the function total.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInputError("cannot normalize an empty tensor")
    if n_max <= n_min:
        raise InvalidRangeError(f"need n_max > n_min, got [{n_min}, {n_max}]")
    lo = arr.min()
    hi = arr.max()
    if hi == lo:
        return np.full(arr.shape, n_min, dtype=np.float64)
    return (arr - lo) / (hi - lo) * (n_max - n_min) + n_min


def preprocess_pipeline(image: np.ndarray, config: PreprocessConfig) -> np.ndarray:
    """Run the full chain; output shape is (target_height, target_width, 3)."""
    rgb = to_rgb(image)
    filtered = median_filter(rgb, config.filter_kernel)
    resized = resize_bilinear(filtered, config.target_height, config.target_width)
    return min_max_normalize(resized, config.n_min, config.n_max)


def dump_tensor_csv(tensor: np.ndarray, path: Path | str) -> None:
    """Debug helper: write a tensor's shape and flattened values as CSV."""
    arr = np.asarray(tensor)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["shape"] + list(arr.shape))
        for v in arr.reshape(-1):
            writer.writerow([repr(float(v))])
