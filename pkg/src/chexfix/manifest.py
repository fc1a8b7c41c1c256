"""Line-delimited JSON manifest and report-corpus I/O.

A manifest line carries one study: identifiers, image geometry, the
ground-truth report, and per-model reports.  Corpus files carry one
report per line keyed by study id and model name ("ground_truth" for the
reference side).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import StudyRecord
from .errors import IngestError


@dataclass(frozen=True)
class StudyEntry:
    """One manifest row: the study record plus per-model image frames."""

    study: StudyRecord
    model_image_sizes: dict[str, tuple[int, int]] = field(default_factory=dict)


def _as_size(value, what: str) -> tuple[int, int]:
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) for v in value)):
        raise ValueError(f"{what} must be [width, height] integers, got {value!r}")
    return (value[0], value[1])


def _as_spacing(value, what: str) -> tuple[float, float]:
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value)):
        raise ValueError(f"{what} must be [sx, sy] numbers, got {value!r}")
    return (float(value[0]), float(value[1]))


def parse_manifest_line(line: str) -> StudyEntry:
    record = json.loads(line)
    if not isinstance(record, dict):
        raise ValueError("manifest line must be a JSON object")
    reports = record.get("reports")
    if not isinstance(reports, dict) or "ground_truth" not in reports:
        raise ValueError("manifest line needs reports.ground_truth")
    models = reports.get("models", {})
    if not isinstance(models, dict) or not all(isinstance(v, str) for v in models.values()):
        raise ValueError("reports.models must map model name to text")
    study = StudyRecord(
        study_id=str(record["study_id"]),
        image_ref=str(record.get("image_ref", "")),
        original_size=_as_size(record["original_size"], "original_size"),
        pixel_spacing=_as_spacing(record["pixel_spacing_mm"], "pixel_spacing_mm"),
        ground_truth_report=str(reports["ground_truth"]),
        model_reports=dict(models),
    )
    model_sizes = {}
    for model, size in (record.get("model_image_size") or {}).items():
        model_sizes[str(model)] = _as_size(size, f"model_image_size[{model}]")
    return StudyEntry(study=study, model_image_sizes=model_sizes)


def load_manifest(path: str | Path) -> list[StudyEntry]:
    entries: list[StudyEntry] = []
    seen: set[str] = set()
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read manifest: {exc}", path=str(path)) from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            entry = parse_manifest_line(line)
        except (ValueError, KeyError, TypeError) as exc:
            raise IngestError(str(exc), path=str(path), line=lineno) from exc
        if entry.study.study_id in seen:
            raise IngestError(f"duplicate study_id {entry.study.study_id!r}", path=str(path), line=lineno)
        seen.add(entry.study.study_id)
        entries.append(entry)
    return entries


def dump_manifest_line(entry: StudyEntry) -> str:
    study = entry.study
    record = {
        "study_id": study.study_id,
        "image_ref": study.image_ref,
        "original_size": list(study.original_size),
        "pixel_spacing_mm": list(study.pixel_spacing),
        "reports": {
            "ground_truth": study.ground_truth_report,
            "models": dict(study.model_reports),
        },
    }
    if entry.model_image_sizes:
        record["model_image_size"] = {m: list(s) for m, s in entry.model_image_sizes.items()}
    return json.dumps(record, sort_keys=True)


def write_manifest(path: str | Path, entries: list[StudyEntry]):
    Path(path).write_text("".join(dump_manifest_line(e) + "\n" for e in entries), encoding="utf-8")


# ---------------------------------------------------------------------------
# Report corpora
# ---------------------------------------------------------------------------

GROUND_TRUTH = "ground_truth"

Corpus = dict[str, dict[str, str]]  # study_id -> model -> report text


def write_corpus(path: str | Path, corpus: Corpus):
    lines = []
    for study_id in corpus:
        for model in corpus[study_id]:
            lines.append(
                json.dumps(
                    {"study_id": study_id, "model": model, "report": corpus[study_id][model]},
                    sort_keys=True,
                )
            )
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_corpus(path: str | Path) -> Corpus:
    corpus: Corpus = {}
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read corpus: {exc}", path=str(path)) from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            study_id = str(record["study_id"])
            model = str(record["model"])
            report = str(record["report"])
        except (ValueError, KeyError, TypeError) as exc:
            raise IngestError(str(exc), path=str(path), line=lineno) from exc
        corpus.setdefault(study_id, {})[model] = report
    return corpus


def gt_corpus_from_manifest(entries: list[StudyEntry]) -> dict[str, str]:
    return {e.study.study_id: e.study.ground_truth_report for e in entries}


def model_corpus_from_manifest(entries: list[StudyEntry]) -> Corpus:
    return {e.study.study_id: dict(e.study.model_reports) for e in entries}
