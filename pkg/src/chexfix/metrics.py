"""Presence / measurement / placement hallucination metrics.

Together these reproduce the benchmark table layout: binary presence
metrics, absolute measurement errors with zero substitution, the
composite score (MAE / F1), failure rates, placement metrics over a
rule-derived verdict, and improvement percentages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import PlacementVerdict
from .errors import CompositeUndefined, ImprovementUndefined
from .extract import EttObservation
from .updater import Guidelines, classify_placement

FAILURE_THRESHOLD_CM = 1.5


@dataclass(frozen=True)
class EvalCase:
    """One study's ground-truth observation paired with a model observation."""

    study_id: str
    gt: EttObservation
    model: EttObservation


@dataclass(frozen=True)
class BinaryMetrics:
    precision: float
    recall: float
    f1: float
    bacc: float
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    degenerate: tuple[str, ...] = ()  # metrics whose denominator was zero


def binary_metrics(pairs: list[tuple[bool, bool]]) -> BinaryMetrics:
    """Precision, recall, F1, balanced accuracy over (label, prediction).

    Metrics with a zero denominator are reported as 0 and flagged.
    """
    if not pairs:
        raise ValueError("binary_metrics requires at least one case")
    tp = sum(1 for label, pred in pairs if label and pred)
    fp = sum(1 for label, pred in pairs if not label and pred)
    fn = sum(1 for label, pred in pairs if label and not pred)
    tn = sum(1 for label, pred in pairs if not label and not pred)

    degenerate: list[str] = []

    def safe(num: float, den: float, name: str) -> float:
        if den == 0:
            degenerate.append(name)
            return 0.0
        return num / den

    precision = safe(tp, tp + fp, "precision")
    recall = safe(tp, tp + fn, "recall")
    f1 = safe(2 * precision * recall, precision + recall, "f1")
    tnr = safe(tn, tn + fp, "tnr")
    bacc = (recall + tnr) / 2
    if "recall" in degenerate or "tnr" in degenerate:
        degenerate.append("bacc")
    return BinaryMetrics(precision, recall, f1, bacc, tp, fp, fn, tn, tuple(dict.fromkeys(degenerate)))


def presence_metrics(cases: list[EvalCase]) -> BinaryMetrics:
    """Binary classification of tube presence: model claim vs ground truth."""
    if not cases:
        raise ValueError("presence_metrics requires at least one case")
    return binary_metrics([(c.gt.present, c.model.present) for c in cases])


def effective_placement(obs: EttObservation, guidelines: Guidelines) -> PlacementVerdict:
    """Placement verdict for scoring: stated, else rule-derived, else correct.

    A report that mentions the tube but gives neither a placement statement
    nor a measurement is scored as claiming correct placement.
    """
    if obs.placement is not None:
        return obs.placement
    if obs.measurement_cm is not None:
        return classify_placement(obs.measurement_cm, guidelines)
    return PlacementVerdict.CORRECT


def placement_metrics(cases: list[EvalCase], guidelines: Guidelines | None = None) -> BinaryMetrics:
    """Placement metrics over cases where both sides report the tube.

    Verdicts binarize with "correct" as the positive class.
    """
    guidelines = guidelines or Guidelines()
    both = [c for c in cases if c.gt.present and c.model.present]
    if not both:
        raise ValueError("placement_metrics requires at least one case with the tube in both reports")
    pairs = [
        (
            effective_placement(c.gt, guidelines).is_correct,
            effective_placement(c.model, guidelines).is_correct,
        )
        for c in both
    ]
    return binary_metrics(pairs)


def measurement_errors(cases: list[EvalCase]) -> list[float]:
    """Per-case |gt - model| in cm over cases measured in the ground truth and
    mentioned by the model; a missing model value is scored as 0."""
    errors = []
    for case in cases:
        if case.gt.measurement_cm is None or not case.model.present:
            continue
        model_value = case.model.measurement_cm if case.model.measurement_cm is not None else 0.0
        errors.append(abs(case.gt.measurement_cm - model_value))
    return errors


def composite(mae: float, f1: float) -> float:
    """MAE divided by F1; lower is better, equal to MAE at a perfect F1."""
    if f1 <= 0:
        raise CompositeUndefined(f"composite undefined for f1={f1}")
    if f1 > 1:
        raise ValueError(f"f1 must be in (0, 1], got {f1}")
    return mae / f1


def failure_rate(errors: list[float], threshold: float = FAILURE_THRESHOLD_CM) -> float:
    """Fraction of errors strictly greater than the threshold."""
    if not errors:
        raise ValueError("failure_rate requires at least one error value")
    return sum(1 for e in errors if e > threshold) / len(errors)


def improvement(original: float, updated: float) -> int:
    """Relative gain 100 * (original - updated) / updated, to whole percent.

    Rounds half away from zero so 2.5% reports as 3%.
    """
    if updated <= 0:
        raise ImprovementUndefined(f"improvement undefined for updated={updated}")
    pct = 100.0 * (original - updated) / updated
    return int(math.floor(abs(pct) + 0.5)) * (1 if pct >= 0 else -1)


def mean_improvement(values: list[float]) -> int:
    """Arithmetic mean of per-model improvement percentages, whole percent."""
    if not values:
        raise ValueError("mean_improvement requires at least one value")
    mean = sum(values) / len(values)
    return int(math.floor(abs(mean) + 0.5)) * (1 if mean >= 0 else -1)


@dataclass(frozen=True)
class MeasurementStats:
    mae: float
    mse: float
    max: float
    min: float
    avg: float
    std: float
    count: int
    composite: float | None
    failure_rate: float


def measurement_stats(
    errors: list[float], f1: float, threshold: float = FAILURE_THRESHOLD_CM
) -> MeasurementStats:
    """Summary statistics of absolute errors plus composite and failure rate."""
    if not errors:
        raise ValueError("measurement_stats requires at least one error value")
    n = len(errors)
    mean = sum(errors) / n
    variance = sum((e - mean) ** 2 for e in errors) / n
    try:
        comp = composite(mean, f1)
    except CompositeUndefined:
        comp = None
    return MeasurementStats(
        mae=mean,
        mse=sum(e * e for e in errors) / n,
        max=max(errors),
        min=min(errors),
        avg=mean,
        std=math.sqrt(variance),
        count=n,
        composite=comp,
        failure_rate=failure_rate(errors, threshold),
    )


@dataclass(frozen=True)
class Improvements:
    mae_pct: int | None
    composite_pct: int | None


@dataclass(frozen=True)
class MetricsTable:
    """All metric groups for one model on one corpus variant."""

    presence: BinaryMetrics
    measurement: MeasurementStats | None
    placement: BinaryMetrics | None
    improvements: Improvements | None = None


def build_metrics_table(cases: list[EvalCase], guidelines: Guidelines | None = None) -> MetricsTable:
    guidelines = guidelines or Guidelines()
    presence = presence_metrics(cases)
    errors = measurement_errors(cases)
    measurement = measurement_stats(errors, presence.f1) if errors else None
    try:
        placement = placement_metrics(cases, guidelines)
    except ValueError:
        placement = None
    return MetricsTable(presence=presence, measurement=measurement, placement=placement)


def paired_improvements(original: MetricsTable, updated: MetricsTable) -> Improvements:
    """Improvement percentages between an original and an updated table."""
    mae_pct = None
    comp_pct = None
    if original.measurement is not None and updated.measurement is not None:
        try:
            mae_pct = improvement(original.measurement.mae, updated.measurement.mae)
        except ImprovementUndefined:
            mae_pct = None
        if original.measurement.composite is not None and updated.measurement.composite is not None:
            try:
                comp_pct = improvement(original.measurement.composite, updated.measurement.composite)
            except ImprovementUndefined:
                comp_pct = None
    return Improvements(mae_pct=mae_pct, composite_pct=comp_pct)


# ---------------------------------------------------------------------------
# Comparison rows and rendering
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    """One line of the original-vs-updated comparison table."""

    model: str
    presence_precision: tuple[float, float]
    mae: tuple[float | None, float | None]
    composite: tuple[float | None, float | None]
    placement_precision: tuple[float | None, float | None]
    mae_improvement_pct: int | None
    composite_improvement_pct: int | None


def comparison_row(model: str, original: MetricsTable, updated: MetricsTable) -> ComparisonRow:
    imps = paired_improvements(original, updated)

    def meas(table: MetricsTable, attr: str) -> float | None:
        return getattr(table.measurement, attr) if table.measurement is not None else None

    def plac(table: MetricsTable) -> float | None:
        return table.placement.precision if table.placement is not None else None

    return ComparisonRow(
        model=model,
        presence_precision=(original.presence.precision, updated.presence.precision),
        mae=(meas(original, "mae"), meas(updated, "mae")),
        composite=(meas(original, "composite"), meas(updated, "composite")),
        placement_precision=(plac(original), plac(updated)),
        mae_improvement_pct=imps.mae_pct,
        composite_improvement_pct=imps.composite_pct,
    )


def _mean(values: list[float | None]) -> float | None:
    concrete = [v for v in values if v is not None]
    if len(concrete) != len(values) or not concrete:
        return None
    return sum(concrete) / len(concrete)


def summarize(rows: list[ComparisonRow]) -> ComparisonRow:
    """Unweighted average row; its improvement entries apply the improvement
    formula to the averaged values rather than averaging percentages."""
    if not rows:
        raise ValueError("summarize requires at least one model row")
    pres = (_mean([r.presence_precision[0] for r in rows]), _mean([r.presence_precision[1] for r in rows]))
    mae = (_mean([r.mae[0] for r in rows]), _mean([r.mae[1] for r in rows]))
    comp = (_mean([r.composite[0] for r in rows]), _mean([r.composite[1] for r in rows]))
    plac = (_mean([r.placement_precision[0] for r in rows]), _mean([r.placement_precision[1] for r in rows]))

    def imp(pair: tuple[float | None, float | None]) -> int | None:
        if pair[0] is None or pair[1] is None:
            return None
        try:
            return improvement(pair[0], pair[1])
        except ImprovementUndefined:
            return None

    return ComparisonRow(
        model="Average",
        presence_precision=pres,  # type: ignore[arg-type]
        mae=mae,
        composite=comp,
        placement_precision=plac,
        mae_improvement_pct=imp(mae),
        composite_improvement_pct=imp(comp),
    )


_DETAIL_COLUMNS = (
    "model,variant,presence_precision,presence_recall,presence_f1,presence_bacc,"
    "mae,mse,max,min,avg,std,composite,failure_rate,"
    "placement_precision,placement_recall,placement_f1,placement_bacc"
)


def render_detail_csv(tables: dict[str, dict[str, MetricsTable]]) -> str:
    """Per-model, per-variant statistics mirroring the full metric tables.

    ``tables`` maps model name to {"original": table, "updated": table}.
    """

    def num(v) -> str:
        return "n/a" if v is None else f"{v:.6g}"

    lines = [_DETAIL_COLUMNS]
    for model in sorted(tables):
        for variant in ("original", "updated"):
            table = tables[model][variant]
            m = table.measurement
            p = table.placement
            lines.append(
                ",".join(
                    [
                        model.replace(",", ";"),
                        variant,
                        num(table.presence.precision),
                        num(table.presence.recall),
                        num(table.presence.f1),
                        num(table.presence.bacc),
                        num(m.mae if m else None),
                        num(m.mse if m else None),
                        num(m.max if m else None),
                        num(m.min if m else None),
                        num(m.avg if m else None),
                        num(m.std if m else None),
                        num(m.composite if m else None),
                        num(m.failure_rate if m else None),
                        num(p.precision if p else None),
                        num(p.recall if p else None),
                        num(p.f1 if p else None),
                        num(p.bacc if p else None),
                    ]
                )
            )
    return "\n".join(lines) + "\n"


_COLUMNS = (
    "Model",
    "Presence P (orig)",
    "Presence P (upd)",
    "MAE (orig)",
    "MAE (upd)",
    "MAE improv",
    "Composite (orig)",
    "Composite (upd)",
    "Composite improv",
    "Placement P (orig)",
    "Placement P (upd)",
)


def _cells(row: ComparisonRow) -> list[str]:
    def num(v: float | None) -> str:
        return "n/a" if v is None else f"{v:.2f}"

    def pct(v: int | None) -> str:
        return "n/a" if v is None else f"{v}%"

    return [
        row.model,
        num(row.presence_precision[0]),
        num(row.presence_precision[1]),
        num(row.mae[0]),
        num(row.mae[1]),
        pct(row.mae_improvement_pct),
        num(row.composite[0]),
        num(row.composite[1]),
        pct(row.composite_improvement_pct),
        num(row.placement_precision[0]),
        num(row.placement_precision[1]),
    ]


def render_comparison(rows: list[ComparisonRow], fmt: str = "txt", *, average: bool = True) -> str:
    """Render the comparison table as csv, md, or aligned txt."""
    body = list(rows)
    if average and rows:
        body.append(summarize(rows))
    grid = [list(_COLUMNS)] + [_cells(r) for r in body]
    if fmt == "csv":
        return "\n".join(",".join(cell.replace(",", ";") for cell in line) for line in grid) + "\n"
    if fmt == "md":
        lines = ["| " + " | ".join(grid[0]) + " |", "|" + "|".join("---" for _ in grid[0]) + "|"]
        lines += ["| " + " | ".join(line) + " |" for line in grid[1:]]
        return "\n".join(lines) + "\n"
    if fmt == "txt":
        widths = [max(len(line[i]) for line in grid) for i in range(len(grid[0]))]
        lines = []
        for n, line in enumerate(grid):
            lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(line)).rstrip())
            if n == 0:
                lines.append("  ".join("-" * widths[i] for i in range(len(widths))))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}, expected csv, md, or txt")
