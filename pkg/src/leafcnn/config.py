"""Run configuration: flat ``key = value`` files with dotted section keys.

Example:

    # desk-scale run
    data.train_manifest = splits/train.csv
    data.test_manifest = splits/test.csv
    preprocess.target_height = 32
    preprocess.target_width = 32
    model.preset = mini_vgg
    model.name = mini_vgg
    train.epochs = 10
    train.seed = 7
    out.dir = runs/mini

Lines are ``key = value`` with ``#`` comments; unknown or duplicate keys are
rejected so typos fail fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, MissingInputError
from .nn.model import PRESETS
from .nn.train import TrainConfig
from .preprocess import PreprocessConfig

KNOWN_KEYS = {
    "data.train_manifest",
    "data.test_manifest",
    "preprocess.target_height",
    "preprocess.target_width",
    "preprocess.filter_kernel",
    "preprocess.n_min",
    "preprocess.n_max",
    "model.preset",
    "model.name",
    "train.epochs",
    "train.batch_size",
    "train.learning_rate",
    "train.momentum",
    "train.seed",
    "out.dir",
}


@dataclass(frozen=True)
class RunConfig:
    train_manifest: Path | None
    test_manifest: Path | None
    preprocess: PreprocessConfig
    model_preset: str
    model_name: str
    train: TrainConfig
    out_dir: Path | None


def parse_kv_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines, stripping comments and blank lines."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def _take(values: dict[str, str], key: str, convert, default):
    if key not in values:
        return default
    raw = values.pop(key)
    try:
        return convert(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def load_run_config(path: Path | str) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"config file not found: {path}")
    values = parse_kv_text(path.read_text(encoding="utf-8"), source=str(path))
    unknown = set(values) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")

    base = path.parent

    def rel_path(raw: str) -> Path:
        p = Path(raw)
        return p if p.is_absolute() else base / p

    train_manifest = _take(values, "data.train_manifest", rel_path, None)
    test_manifest = _take(values, "data.test_manifest", rel_path, None)
    preprocess = PreprocessConfig(
        target_height=_take(values, "preprocess.target_height", int, 224),
        target_width=_take(values, "preprocess.target_width", int, 224),
        filter_kernel=_take(values, "preprocess.filter_kernel", int, 3),
        n_min=_take(values, "preprocess.n_min", float, 0.0),
        n_max=_take(values, "preprocess.n_max", float, 1.0),
    )
    preset = _take(values, "model.preset", str, "mini_vgg")
    if preset not in PRESETS:
        raise ConfigError(f"{path}: unknown model.preset {preset!r}; available: {sorted(PRESETS)}")
    name = _take(values, "model.name", str, preset)
    train = TrainConfig(
        epochs=_take(values, "train.epochs", int, 10),
        batch_size=_take(values, "train.batch_size", int, 32),
        learning_rate=_take(values, "train.learning_rate", float, 0.01),
        momentum=_take(values, "train.momentum", float, 0.9),
        seed=_take(values, "train.seed", int, 0),
    )
    out_dir = _take(values, "out.dir", rel_path, None)
    return RunConfig(
        train_manifest=train_manifest,
        test_manifest=test_manifest,
        preprocess=preprocess,
        model_preset=preset,
        model_name=name,
        train=train,
        out_dir=out_dir,
    )
