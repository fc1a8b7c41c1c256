"""Compile measurement queries into plans of tool-API calls and execute them.

Plans are straight-line programs over a closed step vocabulary; each step
references outputs of earlier steps by index.  Compilation is total over
the query vocabulary, so no generated code is involved, and execution is
deterministic given a backend's answers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .backends import ToolBackend
from .core import CxrObject, CxrSegmentation, StudyRecord, bbox_size_cm, object_distance_cm
from .errors import BackendError, PlanError, UnsupportedQuery
from .queries import MeasurementQuery, QueryKind

# ---------------------------------------------------------------------------
# Plan steps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Exists:
    object_name: str


@dataclass(frozen=True)
class Find:
    object_name: str


@dataclass(frozen=True)
class Segment:
    object_name: str


@dataclass(frozen=True)
class Filter:
    objects_ref: int
    region_ref: int


@dataclass(frozen=True)
class Within:
    object_ref: int
    region_ref: int


@dataclass(frozen=True)
class Distance:
    a_ref: int
    b_ref: int


@dataclass(frozen=True)
class Diameter:
    object_ref: int


@dataclass(frozen=True)
class Dimensions:
    object_ref: int


@dataclass(frozen=True)
class Width:
    segment_ref: int


@dataclass(frozen=True)
class Height:
    segment_ref: int


@dataclass(frozen=True)
class GuardNonEmpty:
    """Short-circuits to NotPresent when any referenced output is empty."""

    refs: tuple[int, ...]


PlanStep = Union[
    Exists, Find, Segment, Filter, Within, Distance, Diameter, Dimensions, Width, Height, GuardNonEmpty
]

_STEP_OUTPUT = {
    Exists: "bool",
    Find: "objects",
    Segment: "mask",
    Filter: "objects",
    Within: "bool",
    Distance: "scalar",
    Diameter: "scalar",
    Dimensions: "dims",
    Width: "scalar",
    Height: "scalar",
    GuardNonEmpty: "guard",
}

_RESULT_TYPE = {
    QueryKind.DISTANCE_BETWEEN: "scalar",
    QueryKind.DIAMETER_OF: "scalar",
    QueryKind.DIMENSIONS_OF: "dims",
    QueryKind.WIDTH_OF: "scalar",
    QueryKind.HEIGHT_OF: "scalar",
    QueryKind.EXISTENCE_OF: "bool",
}


def _step_refs(step: PlanStep) -> tuple[tuple[int, str], ...]:
    """(ref, expected output type) pairs consumed by a step."""
    if isinstance(step, Filter):
        return ((step.objects_ref, "objects"), (step.region_ref, "mask"))
    if isinstance(step, Within):
        return ((step.object_ref, "objects"), (step.region_ref, "mask"))
    if isinstance(step, Distance):
        return ((step.a_ref, "objects"), (step.b_ref, "objects"))
    if isinstance(step, (Diameter, Dimensions)):
        return ((step.object_ref, "objects"),)
    if isinstance(step, (Width, Height)):
        return ((step.segment_ref, "mask"),)
    if isinstance(step, GuardNonEmpty):
        return tuple((r, "any") for r in step.refs)
    return ()


@dataclass(frozen=True)
class Plan:
    """An ordered, backward-referencing sequence of steps for one query."""

    query: MeasurementQuery
    steps: tuple[PlanStep, ...]

    def __post_init__(self):
        if not self.steps:
            raise PlanError("plan must have at least one step")
        for idx, step in enumerate(self.steps):
            for ref, expected in _step_refs(step):
                if not 0 <= ref < idx:
                    raise PlanError(f"step {idx} references {ref}, which is not an earlier step")
                produced = _STEP_OUTPUT[type(self.steps[ref])]
                if expected not in ("any", produced):
                    raise PlanError(
                        f"step {idx} expects {expected} from step {ref}, which produces {produced}"
                    )
        final = _STEP_OUTPUT[type(self.steps[-1])]
        wanted = _RESULT_TYPE[self.query.kind]
        if final != wanted:
            raise PlanError(f"plan for {self.query.kind.value} must end in a {wanted} step, got {final}")

    def object_name_for(self, ref: int) -> str:
        """Resolve the object name behind a step, following filter chains."""
        step = self.steps[ref]
        if isinstance(step, (Exists, Find, Segment)):
            return step.object_name
        if isinstance(step, Filter):
            return self.object_name_for(step.objects_ref)
        raise PlanError(f"step {ref} has no associated object name")


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scalar:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"scalar outcome must be finite and >= 0, got {self.value}")


@dataclass(frozen=True)
class Dims:
    major: float
    minor: float

    def __post_init__(self):
        for v in (self.major, self.minor):
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"dims outcome must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class NotPresent:
    object_name: str

    @property
    def message(self) -> str:
        return f"{self.object_name} not present in the image."


@dataclass(frozen=True)
class Failed:
    message: str


Outcome = Union[Scalar, Dims, NotPresent, Failed]


@dataclass(frozen=True)
class ProvenanceEntry:
    step_index: int
    step: str
    tool: str
    confidence: float | None = None


@dataclass(frozen=True)
class MeasurementResult:
    query: MeasurementQuery
    outcome: Outcome
    provenance: tuple[ProvenanceEntry, ...] = ()


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


def compile(query: MeasurementQuery) -> Plan:  # noqa: A001 - domain verb
    """Compile a query into its canonical plan shape."""
    kind = query.kind
    if kind is QueryKind.DISTANCE_BETWEEN:
        steps: list[PlanStep] = [
            Find(query.subject),
            Find(query.reference),
            GuardNonEmpty((0, 1)),
            Distance(0, 1),
        ]
    elif kind in (QueryKind.DIAMETER_OF, QueryKind.DIMENSIONS_OF):
        measure = Diameter if kind is QueryKind.DIAMETER_OF else Dimensions
        if query.region is None:
            steps = [Find(query.subject), GuardNonEmpty((0,)), measure(0)]
        else:
            steps = [
                Find(query.subject),
                GuardNonEmpty((0,)),
                Segment(query.region),
                GuardNonEmpty((2,)),
                Filter(0, 2),
                GuardNonEmpty((4,)),
                measure(4),
            ]
    elif kind in (QueryKind.WIDTH_OF, QueryKind.HEIGHT_OF):
        # The region, when present, stays on the query for provenance; there
        # is no region-restriction step in the vocabulary for masks.
        measure = Width if kind is QueryKind.WIDTH_OF else Height
        steps = [Segment(query.subject), GuardNonEmpty((0,)), measure(0)]
    elif kind is QueryKind.EXISTENCE_OF:
        steps = [Exists(query.subject)]
    else:  # pragma: no cover - enum is closed
        raise UnsupportedQuery(f"no plan shape for query kind {kind!r}")
    return Plan(query, tuple(steps))


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def select_one(objects: list[CxrObject]) -> CxrObject:
    """Deterministic pick: highest confidence, then smaller area, then position."""
    if not objects:
        raise PlanError("select_one on empty object list")
    return min(objects, key=lambda o: (-o.confidence, o.area_px, o.bbox))


class PlanExecutor:
    """Runs plans for one study, caching tool calls across queries.

    Single-use per study; different studies get their own executor and may
    run in parallel as long as the backend tolerates concurrent calls.
    """

    def __init__(self, study: StudyRecord, backend: ToolBackend, *, min_confidence: float = 0.0):
        if not 0.0 <= min_confidence <= 1.0:
            raise ValueError(f"min_confidence must be in [0, 1], got {min_confidence}")
        self._study = study
        self._backend = backend
        self._min_confidence = min_confidence
        self._cache: dict[tuple[str, str], object] = {}

    def _find(self, name: str) -> list[CxrObject]:
        key = ("find", name)
        if key not in self._cache:
            objects = self._backend.find(name)
            self._cache[key] = [o for o in objects if o.confidence >= self._min_confidence]
        return self._cache[key]  # type: ignore[return-value]

    def _segment(self, name: str) -> CxrSegmentation:
        key = ("segment", name)
        if key not in self._cache:
            self._cache[key] = self._backend.segment(name)
        return self._cache[key]  # type: ignore[return-value]

    def _exists(self, name: str) -> tuple[bool, float]:
        key = ("exists", name)
        if key not in self._cache:
            self._cache[key] = self._backend.exists(name)
        return self._cache[key]  # type: ignore[return-value]

    def run(self, plan: Plan) -> MeasurementResult:
        spacing = self._study.pixel_spacing
        outputs: list[object] = []
        provenance: list[ProvenanceEntry] = []

        def tool(name: str) -> str:
            return self._backend.tool_for(name)

        try:
            for idx, step in enumerate(plan.steps):
                if isinstance(step, Exists):
                    found, confidence = self._exists(step.object_name)
                    outputs.append(found)
                    provenance.append(
                        ProvenanceEntry(idx, f"exists({step.object_name})", tool(step.object_name), confidence)
                    )
                elif isinstance(step, Find):
                    objects = self._find(step.object_name)
                    outputs.append(objects)
                    top = max((o.confidence for o in objects), default=None)
                    provenance.append(
                        ProvenanceEntry(idx, f"find({step.object_name})", tool(step.object_name), top)
                    )
                elif isinstance(step, Segment):
                    seg = self._segment(step.object_name)
                    outputs.append(seg)
                    provenance.append(
                        ProvenanceEntry(idx, f"segment({step.object_name})", tool(step.object_name))
                    )
                elif isinstance(step, GuardNonEmpty):
                    for ref in step.refs:
                        value = outputs[ref]
                        empty = (isinstance(value, list) and not value) or (
                            isinstance(value, CxrSegmentation) and value.is_empty
                        )
                        if empty:
                            missing = plan.object_name_for(ref)
                            return MeasurementResult(
                                plan.query, NotPresent(missing), tuple(provenance)
                            )
                    outputs.append(True)
                elif isinstance(step, Filter):
                    objects = outputs[step.objects_ref]
                    region: CxrSegmentation = outputs[step.region_ref]
                    outputs.append([o for o in objects if region.contains(*o.center)])
                elif isinstance(step, Within):
                    obj = select_one(outputs[step.object_ref])
                    region = outputs[step.region_ref]
                    outputs.append(region.contains(*obj.center))
                elif isinstance(step, Distance):
                    a = select_one(outputs[step.a_ref])
                    b = select_one(outputs[step.b_ref])
                    outputs.append(object_distance_cm(a, b, spacing))
                elif isinstance(step, Diameter):
                    obj = select_one(outputs[step.object_ref])
                    w_cm, h_cm = bbox_size_cm(obj, spacing)
                    outputs.append(max(w_cm, h_cm))
                elif isinstance(step, Dimensions):
                    obj = select_one(outputs[step.object_ref])
                    w_cm, h_cm = bbox_size_cm(obj, spacing)
                    outputs.append((max(w_cm, h_cm), min(w_cm, h_cm)))
                elif isinstance(step, Width):
                    seg: CxrSegmentation = outputs[step.segment_ref]
                    outputs.append(seg.pixel_width() * spacing[0] / 10.0)
                elif isinstance(step, Height):
                    seg = outputs[step.segment_ref]
                    outputs.append(seg.pixel_height() * spacing[1] / 10.0)
                else:  # pragma: no cover - vocabulary is closed
                    raise PlanError(f"unknown step {step!r}")
        except BackendError as exc:
            return MeasurementResult(plan.query, Failed(str(exc)), tuple(provenance))

        value = outputs[-1]
        if isinstance(value, bool):
            outcome: Outcome = Scalar(1.0) if value else NotPresent(plan.query.subject)
        elif isinstance(value, tuple):
            outcome = Dims(*value)
        else:
            outcome = Scalar(float(value))
        return MeasurementResult(plan.query, outcome, tuple(provenance))


def execute(
    plan: Plan, study: StudyRecord, backend: ToolBackend, *, min_confidence: float = 0.0
) -> MeasurementResult:
    """One-shot execution; batch callers should reuse a PlanExecutor."""
    return PlanExecutor(study, backend, min_confidence=min_confidence).run(plan)
