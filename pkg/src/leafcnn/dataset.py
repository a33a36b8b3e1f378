"""Dataset ingestion, stratified splitting, label encoding and synthetic corpora.

A corpus on disk is one subdirectory per class; class indices are assigned by
lexicographic directory-name order. Manifests are written as UTF-8 CSV with
header ``path,label_index,label_name``, LF line endings and paths relative to
the manifest's own directory.
"""

from __future__ import annotations

import colorsys
import csv
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imageio
from .errors import (
    ClassTooSmallError,
    DecodeError,
    EmptyClassError,
    IndexOutOfRangeError,
    ManifestFormatError,
    MissingInputError,
    NoClassesError,
    StorageError,
    ValidationError,
)
from .rng import Xoshiro256

log = logging.getLogger(__name__)

IMAGE_EXTENSIONS = {".ppm", ".png", ".jpg", ".jpeg"}

MANIFEST_HEADER = ("path", "label_index", "label_name")


@dataclass(frozen=True)
class ClassLabel:
    index: int
    name: str


@dataclass(frozen=True)
class LabeledImage:
    path: Path
    label: int


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[LabeledImage, ...]
    classes: tuple[ClassLabel, ...]

    def __post_init__(self):
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate class names: {names}")
        for i, c in enumerate(self.classes):
            if c.index != i:
                raise ValidationError(f"class indices not dense: {self.classes}")
        k = len(self.classes)
        for rec in self.records:
            if not 0 <= rec.label < k:
                raise ValidationError(f"record label {rec.label} outside [0, {k})")

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def class_names(self) -> list[str]:
        return [c.name for c in self.classes]

    @property
    def per_class_counts(self) -> list[int]:
        counts = [0] * len(self.classes)
        for rec in self.records:
            counts[rec.label] += 1
        return counts

    @property
    def labels(self) -> list[int]:
        return [rec.label for rec in self.records]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )


@dataclass(frozen=True)
class SyntheticSpec:
    num_classes: int = 5
    images_per_class: int = 200
    height: int = 32
    width: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValidationError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.images_per_class < 1:
            raise ValidationError("images_per_class must be >= 1")
        if self.height < 8 or self.width < 8:
            raise ValidationError("synthetic images must be at least 8x8")


def scan_dataset(root: Path | str) -> DatasetManifest:
    """Build a manifest from a directory-per-class tree.

    Classes are the immediate subdirectories of ``root``, sorted by name and
    indexed densely from 0. Within each class, files with an image extension
    are listed in sorted order and verified decodable; files that fail to
    decode are skipped with a warning. Repeated scans of the same tree
    produce identical manifests.
    """
    root = Path(root)
    if not root.is_dir():
        raise NoClassesError(f"{root}: not a directory")
    subdirs = sorted((d for d in root.iterdir() if d.is_dir()), key=lambda d: d.name)
    if not subdirs:
        raise NoClassesError(f"{root}: no class subdirectories")
    classes = tuple(ClassLabel(i, d.name) for i, d in enumerate(subdirs))
    records = []
    for label, d in zip(classes, subdirs):
        kept = 0
        for f in sorted(d.iterdir(), key=lambda p: p.name):
            if not f.is_file() or f.suffix.lower() not in IMAGE_EXTENSIONS:
                continue
            try:
                imageio.load_image(f)
            except DecodeError as exc:
                log.warning("skipping undecodable image %s: %s", f, exc)
                continue
            records.append(LabeledImage(f, label.index))
            kept += 1
        if kept == 0:
            raise EmptyClassError(f"class {label.name!r} has no decodable images")
    return DatasetManifest(tuple(records), classes)


def stratified_split(
    manifest: DatasetManifest, spec: SplitSpec
) -> tuple[DatasetManifest, DatasetManifest]:
    """Split a manifest per class into train and test partitions.

    For a class with N records, the train partition receives
    round-half-up(train_fraction * N) of them, chosen by a seeded
    Fisher-Yates shuffle of that class's records (classes are visited in
    index order on one shared stream). Both output manifests keep the
    original record order.
    """
    counts = manifest.per_class_counts
    for label, n in zip(manifest.classes, counts):
        if n < 2:
            raise ClassTooSmallError(f"class {label.name!r} has {n} record(s), needs >= 2")
    rng = Xoshiro256(spec.seed)
    train_positions: set[int] = set()
    for c in range(manifest.num_classes):
        positions = [i for i, rec in enumerate(manifest.records) if rec.label == c]
        rng.shuffle(positions)
        n_train = int(math.floor(spec.train_fraction * len(positions) + 0.5))
        train_positions.update(positions[:n_train])
    train = tuple(r for i, r in enumerate(manifest.records) if i in train_positions)
    test = tuple(r for i, r in enumerate(manifest.records) if i not in train_positions)
    return (
        DatasetManifest(train, manifest.classes),
        DatasetManifest(test, manifest.classes),
    )


def encode_one_hot(label: int, k: int) -> np.ndarray:
    """Length-k float vector with 1.0 at ``label`` and 0.0 elsewhere."""
    if k < 1:
        raise IndexOutOfRangeError(f"class count must be >= 1, got {k}")
    if not 0 <= label < k:
        raise IndexOutOfRangeError(f"label {label} outside [0, {k})")
    vec = np.zeros(k, dtype=np.float64)
    vec[label] = 1.0
    return vec


def _class_image(spec: SyntheticSpec, class_index: int, rng: Xoshiro256) -> np.ndarray:
    """Render one synthetic sample: class hue + class texture frequency + noise."""
    h, w = spec.height, spec.width
    hue = class_index / spec.num_classes
    base = np.array(colorsys.hsv_to_rgb(hue, 0.65, 0.8)) * 255.0
    freq = 2.0 + class_index  # diagonal stripe cycles, distinct per class
    phase = rng.next_float() * 2.0 * math.pi
    yy, xx = np.mgrid[0:h, 0:w]
    wave = np.sin(2.0 * math.pi * freq * (xx + yy) / (h + w) + phase)
    texture = 0.75 + 0.25 * wave
    raw = np.frombuffer(rng.next_bytes(h * w * 3), dtype=np.uint8).reshape(h, w, 3)
    noise = raw.astype(np.float64) % 25.0 - 12.0
    img = base[None, None, :] * texture[:, :, None] + noise
    return np.clip(np.floor(img + 0.5), 0.0, 255.0).astype(np.uint8)


def generate_synthetic_corpus(spec: SyntheticSpec, out: Path | str) -> DatasetManifest:
    """Write a directory-per-class PPM corpus and return its scanned manifest.

    Image bytes are a pure function of the spec: one generator seeded with
    ``spec.seed`` is consumed in (class, image) order, drawing one phase
    float plus height*width*3 noise bytes per image.
    """
    out = Path(out)
    rng = Xoshiro256(spec.seed)
    pad = len(str(spec.num_classes - 1))
    try:
        for c in range(spec.num_classes):
            class_dir = out / f"class_{c:0{pad}d}"
            class_dir.mkdir(parents=True, exist_ok=True)
            for i in range(spec.images_per_class):
                img = _class_image(spec, c, rng)
                imageio.write_ppm(class_dir / f"img_{i:04d}.ppm", img)
    except OSError as exc:
        raise StorageError(f"cannot write synthetic corpus under {out}: {exc}") from exc
    return scan_dataset(out)


def write_manifest(manifest: DatasetManifest, path: Path | str) -> None:
    """Write a manifest CSV; record paths are stored relative to the CSV's directory."""
    path = Path(path)
    base = path.parent.resolve()
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(MANIFEST_HEADER)
            for rec in manifest.records:
                rel = os.path.relpath(Path(rec.path).resolve(), base)
                name = manifest.classes[rec.label].name
                writer.writerow([Path(rel).as_posix(), rec.label, name])
    except OSError as exc:
        raise StorageError(f"cannot write manifest {path}: {exc}") from exc


def read_manifest(path: Path | str) -> DatasetManifest:
    """Read a manifest CSV back into memory, reporting errors with line numbers."""
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"manifest not found: {path}")
    base = path.parent
    records = []
    names_by_index: dict[int, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, 1):
            if lineno == 1:
                if tuple(row) != MANIFEST_HEADER:
                    raise ManifestFormatError(
                        f"{path}:1: expected header {','.join(MANIFEST_HEADER)!r}"
                    )
                continue
            if not row:
                continue
            if len(row) != 3:
                raise ManifestFormatError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            rel, idx_text, name = row
            try:
                idx = int(idx_text)
            except ValueError:
                raise ManifestFormatError(
                    f"{path}:{lineno}: label_index {idx_text!r} is not an integer"
                ) from None
            if idx < 0:
                raise ManifestFormatError(f"{path}:{lineno}: negative label_index {idx}")
            if names_by_index.setdefault(idx, name) != name:
                raise ManifestFormatError(
                    f"{path}:{lineno}: label_index {idx} maps to both "
                    f"{names_by_index[idx]!r} and {name!r}"
                )
            records.append(LabeledImage(base / rel, idx))
    if not names_by_index:
        raise ManifestFormatError(f"{path}: manifest has no records")
    k = max(names_by_index) + 1
    if sorted(names_by_index) != list(range(k)):
        raise ManifestFormatError(f"{path}: class indices not dense: {sorted(names_by_index)}")
    classes = tuple(ClassLabel(i, names_by_index[i]) for i in range(k))
    return DatasetManifest(tuple(records), classes)
