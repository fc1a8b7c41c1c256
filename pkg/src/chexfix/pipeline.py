"""End-to-end orchestration: verify each report and score the corpora.

Per report the flow is extract -> generate queries -> compile -> execute
-> update; reports that never mention the tube pass through untouched
(unless every image is forced).  Studies run in a bounded worker pool and
results are emitted in manifest order, so output is deterministic for a
fixed manifest, fixture set, and configuration.
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor

from .config import BackendProvider, PipelineConfig
from .errors import AlignmentError, ChexfixError
from .extract import CategoryLexicon, EttObservation, extract_measured_findings, parse_ett
from .manifest import Corpus, StudyEntry
from .metrics import (
    ComparisonRow,
    EvalCase,
    MetricsTable,
    build_metrics_table,
    comparison_row,
    paired_improvements,
)
from .planner import Dims, MeasurementResult, NotPresent, PlanExecutor, Scalar, compile
from .queries import queries_for_report
from .updater import update_report

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Report verification
# ---------------------------------------------------------------------------


def _outcome_dict(result: MeasurementResult) -> dict:
    outcome = result.outcome
    if isinstance(outcome, Scalar):
        return {"kind": "scalar", "value_cm": outcome.value}
    if isinstance(outcome, Dims):
        return {"kind": "dims", "major_cm": outcome.major, "minor_cm": outcome.minor}
    if isinstance(outcome, NotPresent):
        return {"kind": "not_present", "object_name": outcome.object_name, "message": outcome.message}
    return {"kind": "failed", "message": outcome.message}


def _query_dict(query) -> dict:
    return {
        "kind": query.kind.value,
        "subject": query.subject,
        "reference": query.reference,
        "region": query.region,
    }


def _plan_dict(plan) -> list[str]:
    return [f"{type(step).__name__}{dataclasses.astuple(step)}" for step in plan.steps]


@dataclasses.dataclass(frozen=True)
class ReportOutcome:
    study_id: str
    model: str
    gated: bool
    text: str
    audit: dict


def verify_report(
    study_id: str,
    model: str,
    report: str,
    executor: PlanExecutor,
    config: PipelineConfig,
    lexicon: CategoryLexicon,
) -> ReportOutcome:
    """Run the verification flow for one report against one study's tools."""
    ett = parse_ett(report, lexicon)
    gate_open = ett.observation.present or config.all_images
    audit: dict = {
        "study_id": study_id,
        "model": model,
        "gated": not gate_open,
        "queries": [],
        "plans": [],
        "results": [],
        "edits": [],
    }
    if not gate_open:
        return ReportOutcome(study_id, model, True, report, audit)

    findings = extract_measured_findings(report, lexicon)
    queries = queries_for_report(
        findings, ett, include_non_ett=config.include_non_ett, force_ett=config.all_images
    )
    results: list[MeasurementResult] = []
    for query in queries:
        plan = compile(query)
        result = executor.run(plan)
        results.append(result)
        audit["queries"].append(_query_dict(query))
        audit["plans"].append(_plan_dict(plan))
        audit["results"].append(
            {
                "query": _query_dict(query),
                "outcome": _outcome_dict(result),
                "provenance": [dataclasses.asdict(p) for p in result.provenance],
            }
        )

    updated = update_report(
        report,
        results,
        config.guidelines,
        lexicon=lexicon,
        allow_unanchored=config.all_images,
    )
    audit["edits"] = [
        {
            "kind": e.kind,
            "sentence_index": e.sentence_index,
            "span": list(e.span),
            "before": e.before,
            "after": e.after,
            "reason": e.reason,
            "result_index": e.result_index,
        }
        for e in updated.edits
    ]
    audit["unapplied"] = [{"result_index": i, "reason": r} for i, r in updated.unapplied]
    return ReportOutcome(study_id, model, False, updated.text, audit)


def run_pipeline(
    entries: list[StudyEntry],
    config: PipelineConfig,
    provider: BackendProvider,
) -> tuple[Corpus, list[dict], int]:
    """Verify every model report in the manifest.

    Returns the updated corpus, the audit log rows (manifest order), and
    the count of studies that failed outright (failures are isolated and
    logged, never fatal to the batch).
    """
    lexicon = config.lexicon()

    def process(entry: StudyEntry) -> tuple[str, dict[str, str], list[dict], bool]:
        study = entry.study
        try:
            executor = PlanExecutor(
                study, provider.backend_for(study), min_confidence=config.min_confidence
            )
            texts: dict[str, str] = {}
            audits: list[dict] = []
            for model, report in study.model_reports.items():
                outcome = verify_report(study.study_id, model, report, executor, config, lexicon)
                texts[model] = outcome.text
                audits.append(outcome.audit)
            return study.study_id, texts, audits, False
        except ChexfixError as exc:
            log.error("study %s failed: %s", study.study_id, exc)
            return (
                study.study_id,
                dict(study.model_reports),
                [{"study_id": study.study_id, "error": str(exc)}],
                True,
            )

    jobs = config.jobs or 1
    if jobs > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            processed = list(pool.map(process, entries))
    else:
        processed = [process(e) for e in entries]

    updated: Corpus = {}
    audit_rows: list[dict] = []
    failures = 0
    for study_id, texts, audits, failed in processed:
        updated[study_id] = texts
        audit_rows.extend(audits)
        failures += int(failed)
    return updated, audit_rows, failures


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class ModelEvaluation:
    model: str
    original: MetricsTable
    updated: MetricsTable
    row: ComparisonRow


@dataclasses.dataclass(frozen=True)
class EvalReport:
    models: tuple[ModelEvaluation, ...]

    @property
    def rows(self) -> list[ComparisonRow]:
        return [m.row for m in self.models]


def _check_alignment(gt_ids: set[str], other_ids: set[str], what: str):
    missing = gt_ids ^ other_ids
    if missing:
        raise AlignmentError(f"{what} corpus does not align with ground truth", sorted(missing))


def run_eval(
    gt_corpus: dict[str, str],
    original_corpus: Corpus,
    updated_corpus: Corpus,
    config: PipelineConfig | None = None,
) -> EvalReport:
    """Score original and updated corpora against the ground-truth corpus."""
    config = config or PipelineConfig()
    lexicon = config.lexicon()
    gt_ids = set(gt_corpus)
    _check_alignment(gt_ids, set(original_corpus), "original")
    _check_alignment(gt_ids, set(updated_corpus), "updated")

    from .extract import extract_ett

    gt_obs: dict[str, EttObservation] = {
        sid: extract_ett(text, lexicon) for sid, text in gt_corpus.items()
    }
    models = sorted({m for sid in original_corpus for m in original_corpus[sid]})

    evaluations = []
    for model in models:
        def cases_for(corpus: Corpus) -> list[EvalCase]:
            cases = []
            for sid in sorted(gt_ids):
                if model not in corpus.get(sid, {}):
                    raise AlignmentError(f"model {model!r} missing reports", [sid])
                cases.append(EvalCase(sid, gt_obs[sid], extract_ett(corpus[sid][model], lexicon)))
            return cases

        original_table = build_metrics_table(cases_for(original_corpus), config.guidelines)
        updated_table = build_metrics_table(cases_for(updated_corpus), config.guidelines)
        updated_table = dataclasses.replace(
            updated_table, improvements=paired_improvements(original_table, updated_table)
        )
        evaluations.append(
            ModelEvaluation(
                model=model,
                original=original_table,
                updated=updated_table,
                row=comparison_row(model, original_table, updated_table),
            )
        )
    return EvalReport(models=tuple(evaluations))
