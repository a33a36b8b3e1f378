"""Multiclass confusion analysis and the one-vs-rest metric battery.

The confusion matrix is stored with rows = truth and columns = prediction;
rendering keeps truth on the vertical axis and prediction on the horizontal
axis. Each class is scored one-vs-rest from its TP/TN/FP/FN decomposition:

    precision   = tp / (tp + fp)        f1  = 2 p r / (p + r)
    sensitivity = tp / (tp + fn)        fpr = fp / (fp + tn)
    specificity = tn / (tn + fp)        fnr = fn / (fn + tp)
    accuracy    = (tp + tn) / (tp + tn + fp + fn)

Any 0/0 ratio is defined as 0 so degenerate classes stay total. The model
summary sums the counts over classes before applying the same formulas
(micro averaging, which forces precision = sensitivity = f1), and reports
plain multiclass accuracy (trace / N) alongside because the two differ.

Percentages render at two decimals with round-half-up everywhere.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import (
    EmptyCountsError,
    InvalidLabelError,
    InvalidRatioError,
    LengthMismatchError,
    ValidationError,
)

CLASS_TABLE_HEADER = (
    "category",
    "tp",
    "tn",
    "fp",
    "fn",
    "precision",
    "f1",
    "sensitivity",
    "specificity",
    "fpr",
    "fnr",
    "accuracy",
)
SUMMARY_HEADER = ("model",) + CLASS_TABLE_HEADER[1:] + ("multiclass_accuracy",)

_TEXT_COLUMNS = (
    "Category",
    "TP",
    "TN",
    "FP",
    "FN",
    "Precision (%)",
    "F1 (%)",
    "Sensitivity (%)",
    "Specificity (%)",
    "FPR (%)",
    "FNR (%)",
    "Accuracy (%)",
)


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (k, k) int64, rows = truth, columns = prediction

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValidationError(f"confusion matrix must be square, got shape {arr.shape}")
        if np.any(arr < 0):
            raise ValidationError("confusion matrix counts must be non-negative")
        object.__setattr__(self, "counts", arr.astype(np.int64))

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))


@dataclass(frozen=True)
class BinaryCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    f1: float
    sensitivity: float
    specificity: float
    fpr: float
    fnr: float
    accuracy: float


@dataclass(frozen=True)
class ModelSummary:
    counts: BinaryCounts
    metrics: ClassMetrics
    multiclass_accuracy: float


def confusion_matrix(truths, predictions, k: int) -> ConfusionMatrix:
    """Tally (truth, prediction) pairs: counts[t][p] = |{i : t_i = t and p_i = p}|."""
    truths = np.asarray(truths)
    predictions = np.asarray(predictions)
    if len(truths) != len(predictions):
        raise LengthMismatchError(
            f"{len(truths)} truths vs {len(predictions)} predictions"
        )
    if len(truths) == 0:
        raise LengthMismatchError("cannot tally an empty sample list")
    for name, labels in (("truth", truths), ("prediction", predictions)):
        if labels.min() < 0 or labels.max() >= k:
            raise InvalidLabelError(f"{name} label outside [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (truths, predictions), 1)
    return ConfusionMatrix(counts)


def one_vs_rest(matrix: ConfusionMatrix, c: int) -> BinaryCounts:
    """Binary decomposition of class c: tp on the diagonal, fn across its row,
    fp down its column, tn everything else."""
    if not 0 <= c < matrix.k:
        raise InvalidLabelError(f"class {c} outside [0, {matrix.k})")
    counts = matrix.counts
    tp = int(counts[c, c])
    fn = int(counts[c, :].sum()) - tp
    fp = int(counts[:, c].sum()) - tp
    tn = matrix.total - tp - fn - fp
    return BinaryCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator > 0 else 0.0


def class_metrics(counts: BinaryCounts) -> ClassMetrics:
    """The seven-ratio battery from one class's binary counts."""
    if counts.total <= 0:
        raise EmptyCountsError("all-zero binary counts")
    precision = _ratio(counts.tp, counts.tp + counts.fp)
    sensitivity = _ratio(counts.tp, counts.tp + counts.fn)
    specificity = _ratio(counts.tn, counts.tn + counts.fp)
    f1 = _ratio(2.0 * precision * sensitivity, precision + sensitivity)
    fpr = _ratio(counts.fp, counts.fp + counts.tn)
    fnr = _ratio(counts.fn, counts.fn + counts.tp)
    accuracy = (counts.tp + counts.tn) / counts.total
    return ClassMetrics(
        precision=precision,
        f1=f1,
        sensitivity=sensitivity,
        specificity=specificity,
        fpr=fpr,
        fnr=fnr,
        accuracy=accuracy,
    )


def micro_aggregate(matrix: ConfusionMatrix) -> ModelSummary:
    """Sum one-vs-rest counts over all classes, then score the sums.

    Because the summed FP equals the summed FN (both are N - trace), micro
    precision, sensitivity and f1 coincide. Plain multiclass accuracy
    (trace / N) is carried separately; it is a different number.
    """
    total = BinaryCounts(
        tp=sum(one_vs_rest(matrix, c).tp for c in range(matrix.k)),
        tn=sum(one_vs_rest(matrix, c).tn for c in range(matrix.k)),
        fp=sum(one_vs_rest(matrix, c).fp for c in range(matrix.k)),
        fn=sum(one_vs_rest(matrix, c).fn for c in range(matrix.k)),
    )
    return ModelSummary(
        counts=total,
        metrics=class_metrics(total),
        multiclass_accuracy=matrix.trace / matrix.total,
    )


def round_percent(ratio: float) -> str:
    """Render a ratio in [0, 1] as a percentage with exactly two decimals,
    rounding half up (0.94736.. -> '94.74')."""
    if not 0.0 <= ratio <= 1.0:
        raise InvalidRatioError(f"ratio {ratio} outside [0, 1]")
    scaled = Decimal(str(ratio)) * 100
    return str(scaled.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _metric_cells(metrics: ClassMetrics) -> list[str]:
    return [
        round_percent(metrics.precision),
        round_percent(metrics.f1),
        round_percent(metrics.sensitivity),
        round_percent(metrics.specificity),
        round_percent(metrics.fpr),
        round_percent(metrics.fnr),
        round_percent(metrics.accuracy),
    ]


def _format_table(header: tuple[str, ...], rows: list[list[str]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _csv_text(header: tuple[str, ...], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_class_table(
    class_names, rows: list[tuple[BinaryCounts, ClassMetrics]]
) -> tuple[str, str]:
    """Per-class report in the fixed column order
    (category, TP, TN, FP, FN, then the seven percentages).
    Returns (plain-text table, CSV text)."""
    if len(class_names) != len(rows):
        raise LengthMismatchError(f"{len(class_names)} names vs {len(rows)} rows")
    cells = []
    for name, (counts, metrics) in zip(class_names, rows):
        cells.append(
            [str(name), str(counts.tp), str(counts.tn), str(counts.fp), str(counts.fn)]
            + _metric_cells(metrics)
        )
    return _format_table(_TEXT_COLUMNS, cells), _csv_text(CLASS_TABLE_HEADER, cells)


def per_class_report(matrix: ConfusionMatrix, class_names) -> tuple[str, str]:
    """Convenience wrapper: one_vs_rest + class_metrics for every class."""
    rows = []
    for c in range(matrix.k):
        counts = one_vs_rest(matrix, c)
        rows.append((counts, class_metrics(counts)))
    return render_class_table(class_names, rows)


def render_confusion(matrix: ConfusionMatrix, class_names) -> str:
    """Text grid with predicted labels across the top and truth labels down
    the side."""
    if len(class_names) != matrix.k:
        raise LengthMismatchError(f"{len(class_names)} names for k={matrix.k}")
    header = ("truth \\ predicted",) + tuple(str(n) for n in class_names)
    rows = []
    for t in range(matrix.k):
        rows.append([str(class_names[t])] + [str(int(v)) for v in matrix.counts[t]])
    return _format_table(header, rows)


def render_confusion_svg(matrix: ConfusionMatrix, class_names, cell: int = 48) -> str:
    """Deterministic SVG heatmap: one rect per cell shaded by count / max count,
    with the count printed in the cell center."""
    if len(class_names) != matrix.k:
        raise LengthMismatchError(f"{len(class_names)} names for k={matrix.k}")
    k = matrix.k
    margin = 4 * cell // 3
    width = margin + k * cell + cell // 2
    height = margin + k * cell + cell // 2
    peak = max(1, int(matrix.counts.max()))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="{cell // 4}">'
    ]
    for p, name in enumerate(class_names):
        x = margin + p * cell + cell // 2
        parts.append(f'<text x="{x}" y="{margin - 8}" text-anchor="middle">{name}</text>')
    for t, name in enumerate(class_names):
        y = margin + t * cell + cell // 2
        parts.append(f'<text x="{margin - 8}" y="{y}" text-anchor="end">{name}</text>')
    for t in range(k):
        for p in range(k):
            value = int(matrix.counts[t, p])
            shade = 255 - round(195 * value / peak)
            x = margin + p * cell
            y = margin + t * cell
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="rgb({shade},{shade},{shade})" stroke="black"/>'
            )
            parts.append(
                f'<text x="{x + cell // 2}" y="{y + cell // 2}" text-anchor="middle" '
                f'dominant-baseline="middle">{value}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def summary_row(name: str, summary: ModelSummary) -> list[str]:
    counts = summary.counts
    return (
        [str(name), str(counts.tp), str(counts.tn), str(counts.fp), str(counts.fn)]
        + _metric_cells(summary.metrics)
        + [round_percent(summary.multiclass_accuracy)]
    )


def render_summary(name: str, summary: ModelSummary) -> tuple[str, str]:
    """Single-model summary table and CSV (micro metrics plus multiclass accuracy)."""
    header = ("Model",) + _TEXT_COLUMNS[1:] + ("Multiclass Accuracy (%)",)
    rows = [summary_row(name, summary)]
    return _format_table(header, rows), _csv_text(SUMMARY_HEADER, rows)


def compare_models(entries: list[tuple[str, ModelSummary]]) -> tuple[str, str]:
    """Ranked comparison: rows sorted by micro accuracy descending, ties by
    name ascending. Returns (plain-text table, CSV text)."""
    if not entries:
        raise LengthMismatchError("need at least one model summary")
    ordered = sorted(entries, key=lambda e: (-e[1].metrics.accuracy, e[0]))
    header = ("Model",) + _TEXT_COLUMNS[1:] + ("Multiclass Accuracy (%)",)
    rows = [summary_row(name, summary) for name, summary in ordered]
    return _format_table(header, rows), _csv_text(SUMMARY_HEADER, rows)
