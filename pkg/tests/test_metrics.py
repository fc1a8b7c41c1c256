"""Hallucination metrics: binary stats, errors, composite, improvements."""

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chexfix.benchmarks import BENCHMARK_ROWS
from chexfix.core import PlacementVerdict
from chexfix.errors import CompositeUndefined, ImprovementUndefined
from chexfix.extract import EttObservation
from chexfix.metrics import (
    ComparisonRow,
    EvalCase,
    binary_metrics,
    composite,
    effective_placement,
    failure_rate,
    improvement,
    mean_improvement,
    measurement_errors,
    measurement_stats,
    placement_metrics,
    presence_metrics,
    render_comparison,
    summarize,
)
from chexfix.updater import Guidelines


def case(gt_present, model_present, gt_value=None, model_value=None,
         gt_placement=None, model_placement=None, sid="s"):
    gt = EttObservation(gt_present, gt_value if gt_present else None,
                        gt_placement if gt_present else None)
    model = EttObservation(model_present, model_value if model_present else None,
                           model_placement if model_present else None)
    return EvalCase(sid, gt, model)


def brute_force_binary(pairs):
    """Independent oracle: counts via explicit loops, formulas with 0-guards."""
    tp = fp = fn = tn = 0
    for label, pred in pairs:
        if label and pred:
            tp += 1
        elif not label and pred:
            fp += 1
        elif label and not pred:
            fn += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    tnr = tn / (tn + fp) if tn + fp else 0.0
    bacc = (recall + tnr) / 2
    return precision, recall, f1, bacc


class TestBinaryMetrics:
    def test_perfect_predictions(self):
        pairs = [(True, True)] * 3 + [(False, False)] * 4
        m = binary_metrics(pairs)
        assert (m.precision, m.recall, m.f1, m.bacc) == (1.0, 1.0, 1.0, 1.0)

    def test_single_true_positive(self):
        m = binary_metrics([(True, True)])
        assert m.precision == 1.0 and m.recall == 1.0
        assert "tnr" in m.degenerate and "bacc" in m.degenerate

    def test_degenerate_divisions_report_zero(self):
        m = binary_metrics([(False, False)])
        assert m.precision == 0.0 and "precision" in m.degenerate
        assert m.recall == 0.0 and "recall" in m.degenerate

    @given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=50))
    def test_matches_brute_force_oracle(self, pairs):
        m = binary_metrics(pairs)
        precision, recall, f1, bacc = brute_force_binary(pairs)
        assert (m.precision, m.recall, m.f1, m.bacc) == (precision, recall, f1, bacc)


class TestPresenceMetrics:
    def test_chexpertplus_confusion_matrix_arithmetic(self):
        # 2288 studies, 182 with the tube; TP=138, FP=78 reproduces the
        # published original row: P 0.64, R 0.76, F1 0.69, BACC 0.86
        cases = (
            [case(True, True, sid=f"tp{i}") for i in range(138)]
            + [case(False, True, sid=f"fp{i}") for i in range(78)]
            + [case(True, False, sid=f"fn{i}") for i in range(44)]
            + [case(False, False, sid=f"tn{i}") for i in range(2028)]
        )
        m = presence_metrics(cases)
        assert round(m.precision, 2) == 0.64
        assert round(m.recall, 2) == 0.76
        assert round(m.f1, 2) == 0.69
        assert round(m.bacc, 2) == 0.86

    def test_all_match_is_perfect(self):
        cases = [case(True, True), case(False, False)]
        m = presence_metrics(cases)
        assert m.precision == m.recall == m.f1 == m.bacc == 1.0


class TestMeasurementErrors:
    def test_exact_match_zero(self):
        assert measurement_errors([case(True, True, 4.0, 4.0)]) == [0.0]

    def test_zero_substitution_when_model_missing_value(self):
        assert measurement_errors([case(True, True, 4.0, None)]) == [4.0]

    def test_plain_absolute_difference(self):
        assert measurement_errors([case(True, True, 4.0, 2.5)]) == [1.5]

    def test_restricted_to_mentioned_in_both(self):
        cases = [
            case(True, False, 4.0),  # model silent: excluded
            case(False, True, None, 3.0),  # no gt measurement: excluded
            case(True, True, 4.0, 3.0),
        ]
        assert measurement_errors(cases) == [1.0]

    def test_all_absent_model_values_mean_of_gt(self):
        cases = [case(True, True, v, None, sid=str(v)) for v in (2.0, 4.0, 6.0)]
        errors = measurement_errors(cases)
        assert sum(errors) / len(errors) == pytest.approx(4.0)


class TestComposite:
    def test_published_examples(self):
        assert composite(2.47, 0.69) == pytest.approx(3.58, abs=0.02)
        assert composite(2.80, 0.13) == pytest.approx(21.54, abs=0.02)

    def test_perfect_f1_identity(self):
        assert composite(1.37, 1.0) == 1.37

    def test_zero_f1_undefined(self):
        with pytest.raises(CompositeUndefined):
            composite(2.0, 0.0)

    @given(
        mae=st.floats(0.01, 50),
        f1_low=st.floats(0.05, 0.95),
        bump=st.floats(0.01, 0.04),
    )
    def test_monotone_in_both_arguments(self, mae, f1_low, bump):
        assert composite(mae + bump, f1_low) > composite(mae, f1_low)
        assert composite(mae, f1_low + bump) < composite(mae, f1_low)


class TestFailureRate:
    def test_no_failures(self):
        assert failure_rate([0.2, 0.4]) == 0.0

    def test_half_failures(self):
        assert failure_rate([2.0, 1.0]) == 0.5

    def test_boundary_is_not_a_failure(self):
        assert failure_rate([1.5]) == 0.0
        assert failure_rate([1.5000001]) == 1.0


class TestPlacementMetrics:
    def test_default_correct_when_nothing_stated(self):
        # model mentions the tube with no placement and no measurement;
        # ground truth is correct: counts as a true positive
        c = case(True, True, gt_value=5.0)
        m = placement_metrics([c])
        assert m.tp == 1 and m.fp == 0

    def test_all_correct_perfect_scores(self):
        cases = [case(True, True, 5.0, 5.0, sid=str(i)) for i in range(4)]
        m = placement_metrics(cases)
        assert m.precision == 1.0 and m.recall == 1.0

    def test_verdicts_binarize(self):
        g = Guidelines()
        obs = EttObservation(True, None, PlacementVerdict.TOO_HIGH)
        assert effective_placement(obs, g) is PlacementVerdict.TOO_HIGH
        derived = EttObservation(True, 2.0, None)
        assert effective_placement(derived, g) is PlacementVerdict.TOO_LOW
        silent = EttObservation(True, None, None)
        assert effective_placement(silent, g) is PlacementVerdict.CORRECT

    def test_restricted_to_both_present(self):
        cases = [
            case(True, False, 5.0),
            case(False, True, None, 5.0),
            case(True, True, 5.0, 5.0),
        ]
        m = placement_metrics(cases)
        assert m.tp + m.fp + m.fn + m.tn == 1

    def test_chexpertplus_placement_arithmetic(self):
        # counts (tp, fp, fn, tn) = (69, 38, 18, 13) reproduce the published
        # original placement row: P 0.64, R 0.79, F1 0.71, BACC 0.52
        cases = []
        cases += [case(True, True, 5.0, 5.0, sid=f"tp{i}") for i in range(69)]
        cases += [case(True, True, 9.0, 5.0, sid=f"fp{i}") for i in range(38)]
        cases += [case(True, True, 5.0, 9.0, sid=f"fn{i}") for i in range(18)]
        cases += [case(True, True, 9.0, 9.0, sid=f"tn{i}") for i in range(13)]
        m = placement_metrics(cases)
        assert round(m.precision, 2) == 0.64
        assert round(m.recall, 2) == 0.79
        assert round(m.f1, 2) == 0.71
        assert round(m.bacc, 2) == 0.52


class TestImprovement:
    def test_published_examples(self):
        assert improvement(2.47, 1.30) == 90
        assert improvement(3.56, 1.15) == 210

    def test_identity_is_zero(self):
        assert improvement(1.3, 1.3) == 0

    def test_half_rounds_away_from_zero(self):
        assert improvement(1.23, 1.20) == 3  # 2.5% exactly

    def test_zero_updated_undefined(self):
        with pytest.raises(ImprovementUndefined):
            improvement(1.0, 0.0)

    @given(a=st.floats(0.01, 100), b=st.floats(0.01, 100))
    def test_sign_tracks_direction(self, a, b):
        pct = improvement(a, b)
        if abs(100 * (a - b) / b) >= 0.5:
            assert (pct > 0) == (a > b)

    def test_mean_improvement_reproduces_average(self):
        values = [90, 210, 20, 115, 3, 180, 19, 124, 54, 121, 95]
        assert mean_improvement(values) == 94


class TestMeasurementStats:
    def test_summary_fields(self):
        stats = measurement_stats([1.0, 2.0, 3.0], f1=0.5)
        assert stats.mae == pytest.approx(2.0)
        assert stats.avg == stats.mae
        assert stats.mse == pytest.approx((1 + 4 + 9) / 3)
        assert stats.max == 3.0 and stats.min == 1.0
        assert stats.std == pytest.approx((2 / 3) ** 0.5)
        assert stats.composite == pytest.approx(4.0)
        assert stats.failure_rate == pytest.approx(2 / 3)
        assert stats.count == 3


class TestSummarizeAndRender:
    def rows(self):
        return [
            ComparisonRow("m1", (0.5, 0.6), (2.0, 1.0), (4.0, 2.0), (0.6, 0.7), 100, 100),
            ComparisonRow("m2", (0.7, 0.8), (3.0, 1.5), (6.0, 3.0), (0.7, 0.8), 100, 100),
        ]

    def test_average_row_is_unweighted_mean(self):
        avg = summarize(self.rows())
        assert avg.presence_precision == (pytest.approx(0.6), pytest.approx(0.7))
        assert avg.mae == (pytest.approx(2.5), pytest.approx(1.25))
        assert avg.mae_improvement_pct == 100

    def test_single_model_average_is_itself(self):
        row = self.rows()[0]
        avg = summarize([row])
        assert avg.mae == row.mae
        assert avg.mae_improvement_pct == row.mae_improvement_pct

    def test_published_precision_average(self):
        originals = [0.64, 0.20, 0.63, 0.70, 0.67, 0.71, 0.73, 0.08, 0.28, 0.25, 0.50]
        assert round(sum(originals) / len(originals), 2) == 0.49
        rows = [
            ComparisonRow(f"m{i}", (p, p), (1.0, 1.0), (1.0, 1.0), (p, p), 0, 0)
            for i, p in enumerate(originals)
        ]
        assert summarize(rows).presence_precision[0] == pytest.approx(0.49, abs=0.005)

    @pytest.mark.parametrize("fmt", ["csv", "md", "txt"])
    def test_render_formats(self, fmt):
        out = render_comparison(self.rows(), fmt)
        assert "m1" in out and "Average" in out
        if fmt == "csv":
            assert out.splitlines()[0].startswith("Model,")
        if fmt == "md":
            assert out.startswith("| Model |")

    def test_render_rejects_unknown_format(self):
        with pytest.raises(ValueError):
            render_comparison(self.rows(), "yaml")


class TestBenchmarkArithmetic:
    def test_composite_column_derives_from_mae_and_f1(self):
        for row in BENCHMARK_ROWS:
            for side in (row.original, row.updated):
                assert composite(side.mae, side.presence_f1) == pytest.approx(
                    side.composite, abs=0.02
                ), row.model

    def test_improvement_columns_derive_from_values(self):
        for row in BENCHMARK_ROWS:
            assert improvement(row.original.mae, row.updated.mae) == pytest.approx(
                row.mae_improvement_pct, abs=1
            ), row.model
