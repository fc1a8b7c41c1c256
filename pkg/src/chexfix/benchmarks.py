"""Published benchmark statistics for 11 chest X-ray report generators.

Reference numbers for the tube presence / measurement / placement tasks,
as reported for each generator before and after measurement verification.
They ship with the package so the metric arithmetic (composite scores,
improvement percentages, averages) can be regression-tested and the
comparison table reproduced without any model checkpoints or images.
"""

from __future__ import annotations

from dataclasses import dataclass

AVERAGE_MAE_IMPROVEMENT_PCT = 94
AVERAGE_COMPOSITE_IMPROVEMENT_PCT = 171


@dataclass(frozen=True)
class BenchmarkSide:
    """One corpus variant (original or updated) for one model."""

    presence_precision: float
    presence_recall: float
    presence_f1: float
    presence_bacc: float
    mae: float
    mse: float
    composite: float
    placement_precision: float
    placement_recall: float
    placement_f1: float
    placement_bacc: float


@dataclass(frozen=True)
class BenchmarkRow:
    model: str
    original: BenchmarkSide
    updated: BenchmarkSide
    mae_improvement_pct: float
    composite_improvement_pct: float


def _row(model, orig, upd, imps) -> BenchmarkRow:
    return BenchmarkRow(model, BenchmarkSide(*orig), BenchmarkSide(*upd), imps[0], imps[1])


# Columns per side:
#   presence P, R, F1, BACC, MAE, MSE, composite, placement P, R, F1, BACC
BENCHMARK_ROWS: tuple[BenchmarkRow, ...] = (
    _row(
        "CheXpertPlus",
        (0.64, 0.76, 0.69, 0.86, 2.47, 9.02, 3.58, 0.64, 0.79, 0.71, 0.52),
        (0.68, 0.76, 0.72, 0.86, 1.30, 4.07, 1.81, 0.73, 0.82, 0.77, 0.65),
        (90.0, 98.0),
    ),
    _row(
        "GPT4V",
        (0.20, 0.22, 0.21, 0.57, 3.56, 14.45, 16.95, 0.77, 0.97, 0.86, 0.48),
        (0.58, 0.22, 0.32, 0.60, 1.15, 3.08, 3.59, 0.85, 0.74, 0.79, 0.65),
        (210.0, 372.0),
    ),
    _row(
        "MAIRA-2",
        (0.63, 0.82, 0.71, 0.89, 1.63, 4.13, 2.30, 0.62, 0.98, 0.76, 0.51),
        (0.68, 0.82, 0.74, 0.89, 1.36, 4.42, 1.84, 0.72, 0.83, 0.77, 0.65),
        (20.0, 25.0),
    ),
    _row(
        "CheXagent",
        (0.70, 0.36, 0.48, 0.67, 2.58, 9.70, 5.38, 0.74, 1.00, 0.85, 0.50),
        (0.76, 0.36, 0.49, 0.68, 1.20, 3.13, 2.45, 0.81, 0.88, 0.84, 0.64),
        (115.0, 120.0),
    ),
    _row(
        "RaDialog",
        (0.67, 0.70, 0.69, 0.84, 1.23, 2.41, 1.78, 0.67, 0.90, 0.77, 0.56),
        (0.69, 0.70, 0.70, 0.84, 1.20, 3.70, 1.71, 0.77, 0.84, 0.80, 0.69),
        (3.0, 4.0),
    ),
    _row(
        "Cvt2distilgpt2",
        (0.71, 0.53, 0.60, 0.75, 3.78, 93.71, 6.30, 0.59, 0.90, 0.71, 0.46),
        (0.72, 0.53, 0.61, 0.75, 1.35, 4.87, 2.21, 0.70, 0.81, 0.75, 0.63),
        (180.0, 185.0),
    ),
    _row(
        "MedVersa",
        (0.73, 0.72, 0.72, 0.85, 1.46, 3.91, 2.03, 0.71, 0.94, 0.81, 0.56),
        (0.80, 0.72, 0.76, 0.85, 1.23, 3.92, 1.62, 0.77, 0.81, 0.79, 0.64),
        (19.0, 25.0),
    ),
    _row(
        "LLM-CXR",
        (0.08, 0.53, 0.13, 0.49, 2.80, 10.78, 21.54, 0.62, 0.70, 0.66, 0.44),
        (0.58, 0.53, 0.55, 0.75, 1.25, 3.23, 2.27, 0.79, 0.83, 0.81, 0.70),
        (124.0, 849.0),
    ),
    _row(
        "RadFM",
        (0.28, 0.05, 0.08, 0.52, 1.69, 5.32, 21.12, 0.67, 1.00, 0.80, 0.50),
        (0.47, 0.05, 0.09, 0.52, 1.10, 2.96, 12.22, 0.83, 0.83, 0.83, 0.75),
        (54.0, 73.0),
    ),
    _row(
        "VLCI",
        (0.25, 0.12, 0.16, 0.54, 3.69, 70.29, 23.06, 0.70, 0.93, 0.80, 0.54),
        (0.54, 0.12, 0.20, 0.56, 1.67, 4.43, 8.35, 0.75, 0.80, 0.77, 0.61),
        (121.0, 176.0),
    ),
    _row(
        "RGRG",
        (0.50, 0.84, 0.63, 0.88, 2.38, 8.46, 3.78, 0.64, 0.96, 0.77, 0.49),
        (0.60, 0.84, 0.70, 0.89, 1.22, 2.88, 1.74, 0.74, 0.88, 0.80, 0.65),
        (95.0, 117.0),
    ),
)

# Published average row of the comparison table.
BENCHMARK_AVERAGE = {
    "presence_precision": (0.49, 0.65),
    "mae": (2.48, 1.28),
    "mae_improvement_pct": 94.0,
    "composite": (9.80, 3.62),
    "composite_improvement_pct": 171.0,
    "placement_precision": (0.67, 0.77),
}
