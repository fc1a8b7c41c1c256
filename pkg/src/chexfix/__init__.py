"""chexfix: verify and correct measurement statements in chest X-ray reports.

A deterministic query-compile-execute-update pipeline over pluggable
detection backends, plus the presence/measurement/placement hallucination
metrics used to score report corpora before and after correction.
"""

from .core import (
    CxrObject,
    CxrSegmentation,
    PlacementVerdict,
    StudyRecord,
    px_distance_to_cm,
    rescale_coords,
)
from .extract import (
    CategoryLexicon,
    EttObservation,
    MeasuredFinding,
    extract_ett,
    extract_measured_findings,
    has_measurement_keywords,
    normalize_value,
    split_sentences,
)
from .queries import MeasurementQuery, QueryKind, generate_queries
from .planner import MeasurementResult, Plan, PlanExecutor, compile, execute
from .backends import FixtureStore, HttpToolClient, RoutingTable, ToolBackend, route
from .updater import Guidelines, UpdatedReport, classify_placement, inject_ground_truth, update_report
from .metrics import (
    EvalCase,
    MetricsTable,
    composite,
    failure_rate,
    improvement,
    measurement_errors,
    placement_metrics,
    presence_metrics,
    summarize,
)
from .pipeline import run_eval, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "CategoryLexicon",
    "CxrObject",
    "CxrSegmentation",
    "EttObservation",
    "EvalCase",
    "FixtureStore",
    "Guidelines",
    "HttpToolClient",
    "MeasuredFinding",
    "MeasurementQuery",
    "MeasurementResult",
    "MetricsTable",
    "Plan",
    "PlanExecutor",
    "PlacementVerdict",
    "QueryKind",
    "RoutingTable",
    "StudyRecord",
    "ToolBackend",
    "UpdatedReport",
    "classify_placement",
    "compile",
    "composite",
    "execute",
    "extract_ett",
    "extract_measured_findings",
    "failure_rate",
    "generate_queries",
    "has_measurement_keywords",
    "improvement",
    "inject_ground_truth",
    "measurement_errors",
    "normalize_value",
    "placement_metrics",
    "presence_metrics",
    "px_distance_to_cm",
    "rescale_coords",
    "route",
    "run_eval",
    "run_pipeline",
    "split_sentences",
    "summarize",
    "update_report",
]
