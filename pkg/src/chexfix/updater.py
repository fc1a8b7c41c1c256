"""Apply measurement results to a report: replace values, drop hallucinated
objects, and reconcile tube-placement statements with the rule verdict.

Edits are recorded against the original text and replayed to produce the
updated text, so the transformation stays auditable and reproducible.
Sentences that mention no queried object are never touched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .core import CxrObject, PlacementVerdict, StudyRecord, object_distance_cm
from .backends import FixtureAnnotation
from .errors import AnnotationError, ConsistencyError
from .extract import (
    CategoryLexicon,
    MeasuredFinding,
    Sentence,
    extract_measured_findings,
    parse_ett,
    sentence_negated,
    split_sentences,
)
from .planner import Dims, Failed, MeasurementResult, NotPresent, ProvenanceEntry, Scalar, select_one
from .queries import CARINA_REFERENCE, ETT_SUBJECT, MeasurementQuery, QueryKind


@dataclass(frozen=True)
class Guidelines:
    """Tube-position guideline: tip-to-carina window considered correct."""

    ett_correct_range_cm: tuple[float, float] = (3.0, 7.0)
    ett_ideal_cm: tuple[float, float] = (5.0, 2.0)  # center +/- tolerance, documentation only

    def __post_init__(self):
        low, high = self.ett_correct_range_cm
        if not (0 < low < high):
            raise ValueError(f"correct range must satisfy 0 < low < high, got {self.ett_correct_range_cm}")


def classify_placement(distance_cm: float, guidelines: Guidelines | None = None) -> PlacementVerdict:
    """Rule verdict for a tip-to-carina distance; the window is inclusive."""
    guidelines = guidelines or Guidelines()
    low, high = guidelines.ett_correct_range_cm
    if distance_cm < low:
        return PlacementVerdict.TOO_LOW
    if distance_cm > high:
        return PlacementVerdict.TOO_HIGH
    return PlacementVerdict.CORRECT


# ---------------------------------------------------------------------------
# Edits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Edit:
    kind: str  # "replace" | "remove_sentence" | "append_clause"
    sentence_index: int
    span: tuple[int, int]  # absolute offsets in the original text
    before: str
    after: str
    reason: str
    result_index: int


@dataclass(frozen=True)
class UpdatedReport:
    text: str
    edits: tuple[Edit, ...]
    results_used: tuple[MeasurementResult, ...]
    original_text: str = ""
    unapplied: tuple[tuple[int, str], ...] = ()  # (result index, reason)


def apply_edits(text: str, edits: tuple[Edit, ...] | list[Edit]) -> str:
    """Replay edits against the original text; spans must not overlap."""
    ordered = sorted(edits, key=lambda e: (e.span[0], e.span[1]))
    previous_end = 0
    for edit in ordered:
        start, end = edit.span
        if start < previous_end:
            raise ValueError(f"overlapping edit spans at {edit.span}")
        if text[start:end] != edit.before:
            raise ValueError(f"edit expects {edit.before!r} at {edit.span}, found {text[start:end]!r}")
        previous_end = max(previous_end, end)
    out = text
    for edit in sorted(edits, key=lambda e: (-e.span[0], -e.span[1], e.result_index)):
        start, end = edit.span
        out = out[:start] + edit.after + out[end:]
    return out


# ---------------------------------------------------------------------------
# Rendering templates
# ---------------------------------------------------------------------------

_VERDICT_WORD = {
    PlacementVerdict.CORRECT: "correct",
    PlacementVerdict.TOO_LOW: "too low",
    PlacementVerdict.TOO_HIGH: "too high",
    PlacementVerdict.INCORRECT_UNSPECIFIED: "incorrect",
}


def render_value_cm(value_cm: float) -> str:
    return f"{value_cm:.1f} cm"


def ett_measurement_sentence(value_cm: float, verdict: PlacementVerdict) -> str:
    """Fixed template carrying both the verified distance and the verdict."""
    sentence = (
        f"The endotracheal tube tip is {value_cm:.1f} cm above the carina; "
        f"position is {_VERDICT_WORD[verdict]}."
    )
    if not verdict.is_correct:
        sentence += " Repositioning is recommended."
    return sentence


def placement_clause(verdict: PlacementVerdict) -> str:
    clause = f"The endotracheal tube position is {_VERDICT_WORD[verdict]}."
    if not verdict.is_correct:
        clause += " Repositioning is recommended."
    return clause


# ---------------------------------------------------------------------------
# update_report
# ---------------------------------------------------------------------------

_BELOW_RE = re.compile(r"\bbelow\b(?=\s+(?:the\s+)?carina\b)", re.IGNORECASE)


def _object_pattern(object_name: str) -> re.Pattern:
    body = re.escape(object_name).replace(r"\ ", r"\s+")
    return re.compile(rf"\b{body}s?\b", re.IGNORECASE)


def _is_ett_query(query: MeasurementQuery) -> bool:
    return query.kind is QueryKind.DISTANCE_BETWEEN and query.subject == ETT_SUBJECT


def _cue_deletion_span(sentence: Sentence, cue_span: tuple[int, int], text: str) -> tuple[int, int]:
    """Extend a cue span over its separator so deletion reads cleanly."""
    start, end = cue_span
    prefix = text[sentence.start:start]
    if prefix.strip() == "":
        tail = re.match(r"\s*[,;]?\s*", text[end:sentence.end])
        return (start, end + (tail.end() if tail else 0))
    lead = re.search(r"(?:\s*(?:[,;]|\band\b|\bwith\b|\bbut\b|\bnow\b))?\s*$", prefix)
    return (start - (len(prefix) - lead.start()) if lead else start, end)


class _EditBuilder:
    def __init__(self, report: str, sentences: list[Sentence]):
        self.report = report
        self.sentences = sentences
        self.edits: list[Edit] = []
        self.removed: set[int] = set()
        self.unapplied: list[tuple[int, str]] = []

    def sentence_at(self, position: int) -> Sentence:
        for sentence in self.sentences:
            if sentence.start <= position < sentence.end:
                return sentence
        return self.sentences[-1]

    def replace(self, span: tuple[int, int], after: str, reason: str, result_index: int):
        sentence = self.sentence_at(span[0])
        self.edits.append(
            Edit("replace", sentence.index, span, self.report[span[0]:span[1]], after, reason, result_index)
        )

    def remove_sentence(self, sentence: Sentence, reason: str, result_index: int) -> bool:
        if sentence.index in self.removed:
            return False
        self.removed.add(sentence.index)
        self.edits.append(
            Edit(
                "remove_sentence",
                sentence.index,
                (sentence.start, sentence.end),
                sentence.text,
                "",
                reason,
                result_index,
            )
        )
        return True

    def append_clause(self, sentence: Sentence | None, clause: str, reason: str, result_index: int):
        position = sentence.end if sentence is not None else len(self.report)
        index = sentence.index if sentence is not None else (len(self.sentences) - 1 if self.sentences else 0)
        separator = " " if position > 0 else ""
        self.edits.append(
            Edit("append_clause", index, (position, position), "", separator + clause, reason, result_index)
        )


def _locate_finding(
    findings: list[MeasuredFinding], query: MeasurementQuery
) -> MeasuredFinding | None:
    candidates = [f for f in findings if f.is_present and f.object_name == query.subject.lower()]
    if not candidates:
        return None
    hint = query.source_finding
    if hint is not None:
        same_sentence = [f for f in candidates if f.sentence_index == hint.sentence_index]
        if same_sentence:
            return same_sentence[0]
    return candidates[0]


def update_report(
    report: str,
    results: list[MeasurementResult],
    guidelines: Guidelines | None = None,
    *,
    lexicon: CategoryLexicon | None = None,
    allow_unanchored: bool = False,
) -> UpdatedReport:
    """Rewrite a report so it agrees with every measurement result.

    Scalar and dims results replace the numeric expression of their source
    sentence (or append a templated measurement sentence when the report
    gave none); a not-present subject has its claim sentences removed; tube
    results additionally get their placement statements reconciled with the
    guideline verdict.  Results that carry nothing actionable are recorded
    as explicit no-ops so every result is accounted for.
    """
    guidelines = guidelines or Guidelines()
    lexicon = lexicon or CategoryLexicon.default()
    sentences = split_sentences(report)
    if not sentences and results and not allow_unanchored:
        raise ConsistencyError("cannot update an empty report")

    findings = extract_measured_findings(report, lexicon)
    ett = parse_ett(report, lexicon)
    builder = _EditBuilder(report, sentences)

    for index, result in enumerate(results):
        outcome = result.outcome
        if isinstance(outcome, Failed):
            builder.unapplied.append((index, f"verification failed: {outcome.message}"))
            continue

        if isinstance(outcome, NotPresent):
            if outcome.object_name != result.query.subject:
                builder.unapplied.append(
                    (index, f"reference object missing ({outcome.message}); claim not verifiable")
                )
                continue
            if _is_ett_query(result.query):
                targets = [sentences[i] for i in ett.mention_sentences]
            else:
                pattern = _object_pattern(result.query.subject)
                targets = [s for s in sentences if pattern.search(s.text) and not sentence_negated(s.text)]
            removed_any = False
            for sentence in targets:
                removed_any |= builder.remove_sentence(sentence, outcome.message, index)
            if not removed_any:
                builder.unapplied.append((index, "object no longer mentioned; nothing to remove"))
            continue

        if _is_ett_query(result.query) and isinstance(outcome, Scalar):
            _apply_ett_scalar(builder, ett, outcome.value, guidelines, index, allow_unanchored)
            continue

        finding = _locate_finding(findings, result.query)
        if finding is None or not finding.values_cm:
            raise ConsistencyError(
                f"result for {result.query.subject!r} has no matching measured finding in the report"
            )
        if finding.sentence_index in builder.removed:
            builder.unapplied.append((index, "source sentence removed by another result"))
            continue
        if isinstance(outcome, Scalar):
            rendered = render_value_cm(outcome.value)
        elif isinstance(outcome, Dims):
            rendered = f"{outcome.major:.1f} x {outcome.minor:.1f} cm"
        else:  # pragma: no cover - outcome union is closed
            raise ConsistencyError(f"unhandled outcome {outcome!r}")
        builder.replace(finding.char_span, rendered, "verified measurement", index)

    edits = _drop_edits_inside_removals(builder.edits)
    for index in range(len(results)):
        accounted = any(e.result_index == index for e in edits) or any(
            i == index for i, _ in builder.unapplied
        )
        if not accounted:
            builder.unapplied.append((index, "all edits superseded by sentence removals"))

    text = apply_edits(report, edits)
    return UpdatedReport(
        text=text,
        edits=tuple(edits),
        results_used=tuple(results),
        original_text=report,
        unapplied=tuple(builder.unapplied),
    )


def _drop_edits_inside_removals(edits: list[Edit]) -> list[Edit]:
    """Discard non-removal edits whose spans sit inside a removed sentence.

    Results are processed in order, so an edit can be recorded before a
    later result removes its whole sentence; the removal wins.  Zero-width
    insertions at a removal boundary survive (that is the sentence-rewrite
    idiom: remove, then append at the old end).
    """
    removals = [e.span for e in edits if e.kind == "remove_sentence"]
    kept = []
    for edit in edits:
        if edit.kind != "remove_sentence" and edit.span[0] < edit.span[1]:
            start, end = edit.span
            if any(r_start <= start and end <= r_end for r_start, r_end in removals):
                continue
        kept.append(edit)
    return kept


def _apply_ett_scalar(
    builder: _EditBuilder,
    ett,
    value_cm: float,
    guidelines: Guidelines,
    result_index: int,
    allow_unanchored: bool,
):
    verdict = classify_placement(value_cm, guidelines)
    stated = ett.observation.placement
    report = builder.report
    sentences = builder.sentences

    anchor: Sentence | None = None
    gained = True
    if ett.finding is not None and ett.finding.values_cm:
        anchor = sentences[ett.finding.sentence_index]
        gained = False
        builder.replace(ett.finding.char_span, render_value_cm(value_cm), "verified measurement", result_index)
        below = _BELOW_RE.search(anchor.text)
        if below is not None:
            span = (anchor.start + below.start(), anchor.start + below.end())
            if span[0] >= ett.finding.char_span[1] or span[1] <= ett.finding.char_span[0]:
                builder.replace(span, "above", "verified direction from the carina", result_index)
    elif ett.mention_sentences:
        anchor = sentences[ett.mention_sentences[0]]
    elif not allow_unanchored:
        raise ConsistencyError("tube result for a report with no positive tube mention")

    if stated is not None and stated is not verdict:
        # contradicting placement wording: rewrite pure statements, trim inline cues
        for cue in ett.placement_cues:
            if cue.verdict is verdict:
                continue
            sentence = sentences[cue.sentence_index]
            if anchor is not None and sentence.index == anchor.index and not gained:
                builder.replace(
                    _cue_deletion_span(sentence, cue.span, report),
                    "",
                    "placement wording contradicts the verified distance",
                    result_index,
                )
            else:
                # pure placement statements are replaced wholesale: the removal
                # plus the appended template act as a sentence rewrite
                builder.remove_sentence(
                    sentence, "placement wording contradicts the verified distance", result_index
                )

    if gained:
        builder.append_clause(
            anchor, ett_measurement_sentence(value_cm, verdict), "verified measurement", result_index
        )
    elif stated is None or stated is not verdict:
        builder.append_clause(anchor, placement_clause(verdict), "verified placement", result_index)


# ---------------------------------------------------------------------------
# Ground-truth injection
# ---------------------------------------------------------------------------


def inject_ground_truth(
    gt_report: str,
    annotation: FixtureAnnotation,
    study: StudyRecord,
    guidelines: Guidelines | None = None,
    *,
    lexicon: CategoryLexicon | None = None,
) -> UpdatedReport:
    """Insert an annotation-derived tip-to-carina distance into a ground-truth
    report that mentions a tube without giving a concrete value."""
    guidelines = guidelines or Guidelines()
    parse = parse_ett(gt_report, lexicon)
    if not parse.observation.present:
        return UpdatedReport(gt_report, (), (), original_text=gt_report)
    if parse.observation.measurement_cm is not None:
        return UpdatedReport(gt_report, (), (), original_text=gt_report)

    missing = [name for name in (ETT_SUBJECT, CARINA_REFERENCE) if not annotation.boxes.get(name)]
    if missing:
        raise AnnotationError(
            f"{study.study_id}: annotation lacks entries for {', '.join(missing)}"
        )
    tip = select_one(
        [CxrObject(ETT_SUBJECT, bbox, conf) for bbox, conf in annotation.boxes[ETT_SUBJECT]]
    )
    carina = select_one(
        [CxrObject(CARINA_REFERENCE, bbox, conf) for bbox, conf in annotation.boxes[CARINA_REFERENCE]]
    )
    distance = object_distance_cm(tip, carina, study.pixel_spacing)
    result = MeasurementResult(
        query=MeasurementQuery(QueryKind.DISTANCE_BETWEEN, ETT_SUBJECT, CARINA_REFERENCE),
        outcome=Scalar(distance),
        provenance=(ProvenanceEntry(0, f"distance({ETT_SUBJECT}, {CARINA_REFERENCE})", "annotation", None),),
    )
    return update_report(gt_report, [result], guidelines, lexicon=lexicon)
