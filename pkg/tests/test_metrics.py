import csv
import io

import numpy as np
import pytest

import golden
from leafcnn import metrics
from leafcnn.errors import (
    EmptyCountsError,
    InvalidLabelError,
    InvalidRatioError,
    LengthMismatchError,
)
from leafcnn.metrics import (
    BinaryCounts,
    ConfusionMatrix,
    class_metrics,
    compare_models,
    confusion_matrix,
    micro_aggregate,
    one_vs_rest,
    per_class_report,
    render_class_table,
    render_confusion,
    render_confusion_svg,
    round_percent,
)


def vgg16_matrix():
    return ConfusionMatrix(np.array(golden.VGG16_CONFUSION))


def metric_strings(m):
    return (
        round_percent(m.precision),
        round_percent(m.f1),
        round_percent(m.sensitivity),
        round_percent(m.specificity),
        round_percent(m.fpr),
        round_percent(m.fnr),
        round_percent(m.accuracy),
    )


class TestConfusionMatrix:
    def test_identity_diagonal(self):
        cm = confusion_matrix([0, 1, 2], [0, 1, 2], 3)
        assert np.array_equal(cm.counts, np.eye(3, dtype=int))

    def test_hand_counted(self):
        cm = confusion_matrix([0, 0, 1], [0, 1, 1], 2)
        assert cm.counts.tolist() == [[1, 1], [0, 1]]

    def test_matches_brute_force_tally(self, rng):
        k = 6
        truths = rng.integers(0, k, size=200)
        preds = rng.integers(0, k, size=200)
        cm = confusion_matrix(truths, preds, k)
        for t in range(k):
            for p in range(k):
                expected = sum(1 for a, b in zip(truths, preds) if a == t and b == p)
                assert cm.counts[t, p] == expected

    def test_rejects_bad_inputs(self):
        with pytest.raises(LengthMismatchError):
            confusion_matrix([0, 1], [0], 2)
        with pytest.raises(LengthMismatchError):
            confusion_matrix([], [], 2)
        with pytest.raises(InvalidLabelError):
            confusion_matrix([0, 5], [0, 1], 2)


class TestOneVsRest:
    def test_vgg16_malabar(self):
        counts = one_vs_rest(vgg16_matrix(), 1)
        assert counts == BinaryCounts(tp=148, tn=605, fp=0, fn=4)

    def test_vgg16_jute(self):
        counts = one_vs_rest(vgg16_matrix(), 0)
        assert counts == BinaryCounts(tp=150, tn=605, fp=2, fn=0)

    def test_identity_matrix_has_no_errors(self):
        cm = ConfusionMatrix(np.diag([5, 7, 9]))
        for c in range(3):
            counts = one_vs_rest(cm, c)
            assert counts.fp == 0 and counts.fn == 0

    def test_agrees_with_sample_level_recount(self, rng):
        # relabel the underlying samples to binary and recount from scratch
        k = 4
        truths = rng.integers(0, k, size=300)
        preds = rng.integers(0, k, size=300)
        cm = confusion_matrix(truths, preds, k)
        for c in range(k):
            counts = one_vs_rest(cm, c)
            tp = int(np.sum((truths == c) & (preds == c)))
            fn = int(np.sum((truths == c) & (preds != c)))
            fp = int(np.sum((truths != c) & (preds == c)))
            tn = int(np.sum((truths != c) & (preds != c)))
            assert counts == BinaryCounts(tp=tp, tn=tn, fp=fp, fn=fn)

    def test_class_out_of_range(self):
        with pytest.raises(InvalidLabelError):
            one_vs_rest(vgg16_matrix(), 5)


class TestClassMetricsGolden:
    @pytest.mark.parametrize("model", sorted(golden.GOLDEN_CLASS_ROWS))
    def test_golden_rows_render_exactly(self, model):
        for row in golden.GOLDEN_CLASS_ROWS[model]:
            name, tp, tn, fp, fn, *expected = row
            rendered = metric_strings(class_metrics(BinaryCounts(tp, tn, fp, fn)))
            assert list(rendered) == expected, f"{model}/{name}"

    def test_zero_over_zero_ratios_are_zero(self):
        m = class_metrics(BinaryCounts(tp=0, tn=10, fp=0, fn=0))
        assert m.precision == 0.0
        assert m.sensitivity == 0.0
        assert m.f1 == 0.0
        assert m.fnr == 0.0

    def test_all_zero_counts_rejected(self):
        with pytest.raises(EmptyCountsError):
            class_metrics(BinaryCounts(0, 0, 0, 0))


class TestMicroAggregateGolden:
    def test_golden_model_rows(self):
        # summed counts from each model's per-class rows must render exactly
        for model_row in golden.GOLDEN_MODEL_ROWS:
            name, tp, tn, fp, fn, *expected = model_row
            class_rows = golden.GOLDEN_CLASS_ROWS[name]
            assert tp == sum(r[1] for r in class_rows)
            assert tn == sum(r[2] for r in class_rows)
            assert fp == sum(r[3] for r in class_rows)
            assert fn == sum(r[4] for r in class_rows)
            rendered = metric_strings(class_metrics(BinaryCounts(tp, tn, fp, fn)))
            assert list(rendered) == expected, name

    def test_vgg16_matrix_aggregates_to_golden_row(self):
        summary = micro_aggregate(vgg16_matrix())
        assert summary.counts == BinaryCounts(tp=753, tn=3024, fp=4, fn=4)
        expected = golden.GOLDEN_MODEL_ROWS[-1][5:]
        assert list(metric_strings(summary.metrics)) == list(expected)
        assert round_percent(summary.multiclass_accuracy) == "99.47"

    def test_micro_identity_precision_equals_f1_equals_sensitivity(self, rng):
        for _ in range(50):
            k = int(rng.integers(2, 6))
            cm = ConfusionMatrix(rng.integers(0, 40, size=(k, k)))
            if cm.total == 0 or cm.trace == cm.total:
                continue
            m = micro_aggregate(cm).metrics
            assert m.precision == pytest.approx(m.sensitivity, abs=1e-15)
            assert m.f1 == pytest.approx(m.precision, abs=1e-12)

    def test_identity_matrix_is_perfect(self):
        summary = micro_aggregate(ConfusionMatrix(np.diag([3, 4, 5])))
        assert summary.counts.fp == 0 and summary.counts.fn == 0
        assert metric_strings(summary.metrics) == ("100.00",) * 4 + ("0.00", "0.00", "100.00")
        assert summary.multiclass_accuracy == 1.0


class TestConservation:
    def test_conservation_on_random_matrices(self, rng):
        for _ in range(1000):
            k = int(rng.integers(2, 8))
            cm = ConfusionMatrix(rng.integers(0, 25, size=(k, k)))
            n = cm.total
            if n == 0:
                continue
            total_fp = total_fn = total_tp = total_tn = 0
            for c in range(k):
                b = one_vs_rest(cm, c)
                assert b.total == n
                total_tp += b.tp
                total_tn += b.tn
                total_fp += b.fp
                total_fn += b.fn
                m = class_metrics(b)
                if b.fp + b.tn > 0:
                    assert m.fpr + m.specificity == pytest.approx(1.0, abs=1e-12)
                if b.fn + b.tp > 0:
                    assert m.fnr + m.sensitivity == pytest.approx(1.0, abs=1e-12)
            assert total_tp == cm.trace
            assert total_fp == n - cm.trace
            assert total_fn == n - cm.trace
            assert total_tn == n * (k - 1) - (n - cm.trace)


class TestRoundPercent:
    def test_examples(self):
        assert round_percent(3777 / 3785) == "99.79"
        assert round_percent(0.9) == "90.00"
        assert round_percent(2 * (1.0 * 0.9) / (1.0 + 0.9)) == "94.74"

    def test_half_rounds_up(self):
        assert round_percent(0.98675) == "98.68"
        assert round_percent(0.00005) == "0.01"

    def test_endpoints(self):
        assert round_percent(0.0) == "0.00"
        assert round_percent(1.0) == "100.00"

    def test_out_of_range(self):
        with pytest.raises(InvalidRatioError):
            round_percent(1.001)
        with pytest.raises(InvalidRatioError):
            round_percent(-0.1)


class TestRenderClassTable:
    def test_vgg16_csv_cells_match_golden(self):
        _, csv_text = per_class_report(vgg16_matrix(), golden.SPINACH_CLASSES)
        rows = list(csv.reader(io.StringIO(csv_text)))
        assert rows[0] == list(metrics.CLASS_TABLE_HEADER)
        for got, expected in zip(rows[1:], golden.GOLDEN_CLASS_ROWS["VGG16"]):
            assert got == [str(v) for v in expected]

    def test_empty_class_list_gives_header_only(self):
        text, csv_text = render_class_table([], [])
        assert csv_text == ",".join(metrics.CLASS_TABLE_HEADER) + "\n"
        assert "Category" in text

    def test_csv_round_trips(self):
        _, csv_text = per_class_report(vgg16_matrix(), golden.SPINACH_CLASSES)
        rows = list(csv.reader(io.StringIO(csv_text)))
        rebuilt = io.StringIO()
        writer = csv.writer(rebuilt, lineterminator="\n")
        writer.writerows(rows)
        assert rebuilt.getvalue() == csv_text


class TestRenderConfusion:
    def test_identity_diagonal_grid(self):
        cm = ConfusionMatrix(np.diag([2, 3, 4]))
        text = render_confusion(cm, ["a", "b", "c"])
        lines = text.splitlines()
        assert lines[0].split()[-3:] == ["a", "b", "c"]
        assert "0" in text

    def test_column_sums_are_prediction_counts(self, rng):
        truths = rng.integers(0, 3, size=60)
        preds = rng.integers(0, 3, size=60)
        cm = confusion_matrix(truths, preds, 3)
        for p in range(3):
            assert cm.counts[:, p].sum() == np.sum(preds == p)

    def test_rendering_deterministic(self):
        cm = vgg16_matrix()
        names = golden.SPINACH_CLASSES
        assert render_confusion(cm, names) == render_confusion(cm, names)
        assert render_confusion_svg(cm, names) == render_confusion_svg(cm, names)

    def test_svg_contains_every_count(self):
        svg = render_confusion_svg(vgg16_matrix(), golden.SPINACH_CLASSES)
        assert svg.startswith("<svg")
        for value in (150, 148, 152, 154, 149):
            assert f">{value}</text>" in svg


class TestCompareModels:
    def build_entries(self):
        entries = []
        for name, tp, tn, fp, fn, *_ in golden.GOLDEN_MODEL_ROWS:
            counts = BinaryCounts(tp, tn, fp, fn)
            entries.append(
                (
                    name,
                    metrics.ModelSummary(
                        counts=counts,
                        metrics=class_metrics(counts),
                        multiclass_accuracy=counts.tp * 5 / counts.total,
                    ),
                )
            )
        return entries

    def test_reference_ordering(self):
        text, csv_text = compare_models(self.build_entries())
        rows = list(csv.reader(io.StringIO(csv_text)))
        assert [r[0] for r in rows[1:]] == ["VGG16", "VGG19", "Xception", "InceptionV3"]
        assert rows[1][-2] == "99.79"

    def test_single_model(self):
        _, csv_text = compare_models(self.build_entries()[:1])
        assert len(csv_text.splitlines()) == 2

    def test_equal_accuracy_breaks_ties_alphabetically(self):
        counts = BinaryCounts(10, 30, 2, 2)
        summary = metrics.ModelSummary(counts, class_metrics(counts), 10 / 11)
        _, csv_text = compare_models([("zeta", summary), ("alpha", summary)])
        rows = list(csv.reader(io.StringIO(csv_text)))
        assert [r[0] for r in rows[1:]] == ["alpha", "zeta"]

    def test_empty_rejected(self):
        with pytest.raises(LengthMismatchError):
            compare_models([])
