"""Typed measurement queries derived from positive measurable findings."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .extract import Category, EttParse, MeasuredFinding

ETT_SUBJECT = "endotracheal tube"
CARINA_REFERENCE = "carina"


class QueryKind(enum.Enum):
    DISTANCE_BETWEEN = "distance_between"
    DIAMETER_OF = "diameter_of"
    DIMENSIONS_OF = "dimensions_of"
    WIDTH_OF = "width_of"
    HEIGHT_OF = "height_of"
    EXISTENCE_OF = "existence_of"


@dataclass(frozen=True)
class MeasurementQuery:
    kind: QueryKind
    subject: str
    reference: str | None = None
    region: str | None = None
    source_finding: MeasuredFinding | None = None

    def __post_init__(self):
        if not self.subject:
            raise ValueError("query subject must be non-empty")
        if (self.kind is QueryKind.DISTANCE_BETWEEN) != (self.reference is not None):
            raise ValueError("reference is required exactly for distance queries")
        if self.reference is not None and not self.reference:
            raise ValueError("query reference must be non-empty")


def _query_for(finding: MeasuredFinding) -> MeasurementQuery | None:
    if finding.category is Category.ENDOTRACHEAL_TUBE:
        return MeasurementQuery(
            QueryKind.DISTANCE_BETWEEN, ETT_SUBJECT, CARINA_REFERENCE, source_finding=finding
        )
    if finding.category is Category.LESION:
        kind = QueryKind.DIMENSIONS_OF if len(finding.values_cm) == 2 else QueryKind.DIAMETER_OF
        return MeasurementQuery(kind, finding.object_name, region=finding.region, source_finding=finding)
    if finding.category is Category.PNEUMOTHORAX:
        if finding.region is not None:
            return MeasurementQuery(
                QueryKind.WIDTH_OF, finding.object_name, region=finding.region, source_finding=finding
            )
        return MeasurementQuery(QueryKind.DIAMETER_OF, finding.object_name, source_finding=finding)
    # Other tubes/catheters and miscellaneous devices are measured relative
    # to unstated anatomy, so no verifiable query exists for them.
    return None


def generate_queries(
    findings: list[MeasuredFinding], *, include_non_ett: bool = True
) -> list[MeasurementQuery]:
    """One query per present finding, in finding order; absences emit nothing."""
    queries: list[MeasurementQuery] = []
    for finding in findings:
        if not finding.is_present:
            continue
        if not include_non_ett and finding.category is not Category.ENDOTRACHEAL_TUBE:
            continue
        query = _query_for(finding)
        if query is not None:
            queries.append(query)
    return queries


def queries_for_report(
    findings: list[MeasuredFinding],
    ett: EttParse,
    *,
    include_non_ett: bool = True,
    verify_unmeasured_ett: bool = True,
    force_ett: bool = False,
) -> list[MeasurementQuery]:
    """Queries for one report, adding a tube-verification query on bare mentions.

    A report that asserts a tube without giving a number still needs the
    tip-to-carina distance checked; that query carries no source finding
    and the updater appends the measurement instead of replacing one.
    force_ett adds the verification query even without any mention, which
    is how run-on-every-image mode recovers missed tubes.
    """
    queries = generate_queries(findings, include_non_ett=include_non_ett)
    has_ett_query = any(q.kind is QueryKind.DISTANCE_BETWEEN and q.subject == ETT_SUBJECT for q in queries)
    wants_ett = force_ett or (verify_unmeasured_ett and ett.observation.present)
    if wants_ett and not has_ett_query:
        queries.insert(
            0, MeasurementQuery(QueryKind.DISTANCE_BETWEEN, ETT_SUBJECT, CARINA_REFERENCE)
        )
    return queries
