"""Pluggable detection providers behind one interface.

A provider (fixture store, HTTP client, or routed combination) binds to a
study and yields a ToolBackend whose outputs are always normalized into
original-image pixel coordinates.  The exists/find consistency rule is
enforced here: exists() reports presence derived from find(), keeping the
two views of one image coherent no matter what the raw source says.
"""

from __future__ import annotations

import fnmatch
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np
import requests

from . import rle
from .core import Bbox, CxrObject, CxrSegmentation, StudyRecord, rescale_coords
from .errors import BackendUnavailable, IngestError, ProtocolViolation

SIZE_RECORD = "__size__"  # fixture record carrying per-study frame dims
MASK_MARKER = "MASK"


@runtime_checkable
class ToolBackend(Protocol):
    """Study-bound detection interface used by the plan executor."""

    def exists(self, object_name: str) -> tuple[bool, float]: ...

    def find(self, object_name: str) -> list[CxrObject]: ...

    def segment(self, object_name: str) -> CxrSegmentation: ...

    def tool_for(self, object_name: str) -> str: ...


# ---------------------------------------------------------------------------
# Fixture backend
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixtureAnnotation:
    """Per-study annotation: box/point entries and optional masks."""

    study_id: str
    boxes: dict[str, tuple[tuple[Bbox, float], ...]] = field(default_factory=dict)
    masks: dict[str, CxrSegmentation] = field(default_factory=dict)


def _parse_bbox(text: str) -> Bbox:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(f"expected 4 comma-separated coordinates, got {text!r}")
    left, lower, right, upper = (float(p) for p in parts)
    if left > right or lower > upper:
        raise ValueError(f"inverted bbox {text!r}")
    return (left, lower, right, upper)


def parse_fixture_file(path: str | Path) -> tuple[dict[str, FixtureAnnotation], dict[str, tuple[int, int]]]:
    """Parse the line-delimited fixture format.

    Records:
      study_id<TAB>object_name<TAB>l,lo,r,u<TAB>confidence
      study_id<TAB>object_name<TAB>MASK<TAB>w,h<TAB>rle (space-separated, zero-first)
      study_id<TAB>__size__<TAB>w,h
    Blank lines and lines starting with '#' are ignored.
    """
    path = Path(path)
    boxes: dict[str, dict[str, list[tuple[Bbox, float]]]] = {}
    masks: dict[str, dict[str, CxrSegmentation]] = {}
    sizes: dict[str, tuple[int, int]] = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read fixture file: {exc}", path=str(path)) from exc

    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        try:
            if len(parts) == 3 and parts[1] == SIZE_RECORD:
                w, h = (int(v) for v in parts[2].split(","))
                if w < 1 or h < 1:
                    raise ValueError(f"size must be >= 1, got {w}x{h}")
                sizes[parts[0]] = (w, h)
            elif len(parts) == 5 and parts[2] == MASK_MARKER:
                study_id, object_name = parts[0], parts[1]
                w, h = (int(v) for v in parts[3].split(","))
                runs = tuple(int(v) for v in parts[4].split())
                seg = CxrSegmentation(object_name, w, h, runs)
                masks.setdefault(study_id, {})[object_name] = seg
            elif len(parts) == 4:
                study_id, object_name = parts[0], parts[1]
                bbox = _parse_bbox(parts[2])
                confidence = float(parts[3])
                if not 0.0 <= confidence <= 1.0:
                    raise ValueError(f"confidence {confidence} outside [0, 1]")
                boxes.setdefault(study_id, {}).setdefault(object_name, []).append((bbox, confidence))
            else:
                raise ValueError(f"unrecognized record with {len(parts)} fields")
        except ValueError as exc:
            raise IngestError(str(exc), path=str(path), line=lineno) from exc

    annotations: dict[str, FixtureAnnotation] = {}
    for study_id in sorted(set(boxes) | set(masks) | set(sizes)):
        study_boxes = {name: tuple(entries) for name, entries in boxes.get(study_id, {}).items()}
        study_masks = masks.get(study_id, {})
        size = sizes.get(study_id)
        if size is not None:
            w, h = size
            for name, entries in study_boxes.items():
                for bbox, _ in entries:
                    if bbox[0] < 0 or bbox[1] < 0 or bbox[2] > w or bbox[3] > h:
                        raise IngestError(
                            f"{study_id}/{name}: bbox {bbox} outside {w}x{h}", path=str(path)
                        )
            for name, seg in study_masks.items():
                if (seg.width, seg.height) != (w, h):
                    raise IngestError(
                        f"{study_id}/{name}: mask {seg.width}x{seg.height} does not match size {w}x{h}",
                        path=str(path),
                    )
        annotations[study_id] = FixtureAnnotation(study_id, study_boxes, study_masks)
    return annotations, sizes


class FixtureBackend:
    """Answers exists/find/segment from an annotation, immutably."""

    def __init__(self, annotation: FixtureAnnotation, study: StudyRecord, label: str = "fixtures"):
        self._annotation = annotation
        self._study = study
        self._label = label

    def exists(self, object_name: str) -> tuple[bool, float]:
        found = self.find(object_name)
        if not found:
            return False, 0.0
        return True, max(o.confidence for o in found)

    def find(self, object_name: str) -> list[CxrObject]:
        entries = self._annotation.boxes.get(object_name, ())
        return [CxrObject(object_name, bbox, confidence) for bbox, confidence in entries]

    def segment(self, object_name: str) -> CxrSegmentation:
        seg = self._annotation.masks.get(object_name)
        if seg is not None:
            return seg
        w, h = self._study.original_size
        return CxrSegmentation.empty(object_name, w, h)

    def tool_for(self, object_name: str) -> str:
        return self._label


class FixtureStore:
    """Loads one fixture file and binds per-study backends from it."""

    def __init__(self, path: str | Path):
        self.path = str(path)
        self.annotations, self.sizes = parse_fixture_file(path)

    def annotation_for(self, study_id: str) -> FixtureAnnotation:
        return self.annotations.get(study_id, FixtureAnnotation(study_id))

    def backend_for(self, study: StudyRecord) -> FixtureBackend:
        annotation = self.annotation_for(study.study_id)
        w, h = study.original_size
        for name, entries in annotation.boxes.items():
            for bbox, _ in entries:
                if bbox[0] < 0 or bbox[1] < 0 or bbox[2] > w or bbox[3] > h:
                    raise IngestError(
                        f"{study.study_id}/{name}: bbox {bbox} outside study frame {w}x{h}",
                        path=self.path,
                    )
        return FixtureBackend(annotation, study, label=f"fixtures:{self.path}")


# ---------------------------------------------------------------------------
# HTTP backend
# ---------------------------------------------------------------------------


def _require(condition: bool, message: str):
    if not condition:
        raise ProtocolViolation(message)


def _parse_image_size(payload: dict) -> tuple[int, int]:
    size = payload.get("image_size")
    _require(isinstance(size, list) and len(size) == 2, f"bad image_size {size!r}")
    w, h = size
    _require(isinstance(w, int) and isinstance(h, int) and w >= 1 and h >= 1, f"bad image_size {size!r}")
    return w, h


class HttpToolClient:
    """Wire-protocol client; bounded in-flight requests, JSON over POST."""

    def __init__(self, base_url: str, *, timeout: float = 10.0, max_in_flight: int = 8):
        self.base_url = base_url.rstrip("/")
        self._timeout = timeout
        self._gate = threading.Semaphore(max_in_flight)

    def post(self, endpoint: str, payload: dict) -> dict:
        url = f"{self.base_url}{endpoint}"
        with self._gate:
            try:
                response = requests.post(url, json=payload, timeout=self._timeout)
            except requests.RequestException as exc:
                raise BackendUnavailable(f"{url}: {exc}") from exc
        if response.status_code >= 400:
            detail = ""
            try:
                error = response.json().get("error", {})
                detail = f" ({error.get('code')}: {error.get('message')})"
            except ValueError:
                pass
            raise BackendUnavailable(f"{url}: HTTP {response.status_code}{detail}")
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolViolation(f"{url}: response is not JSON") from exc
        _require(isinstance(body, dict), f"{url}: response is not an object")
        return body

    def backend_for(self, study: StudyRecord) -> "HttpBackend":
        return HttpBackend(self, study)


class HttpBackend:
    """Study-bound adapter over the wire protocol.

    Rescales server-frame coordinates into the study's original frame and
    enforces output invariants; schema violations raise ProtocolViolation
    and transport errors raise BackendUnavailable, both of which execution
    surfaces as Failed results rather than crashes.
    """

    def __init__(self, client: HttpToolClient, study: StudyRecord):
        self._client = client
        self._study = study
        self._find_cache: dict[str, list[CxrObject]] = {}

    def _payload(self, object_name: str) -> dict:
        return {"image_id": self._study.study_id, "object_name": object_name}

    def find(self, object_name: str) -> list[CxrObject]:
        if object_name in self._find_cache:
            return self._find_cache[object_name]
        body = self._client.post("/v1/find", self._payload(object_name))
        frame = _parse_image_size(body)
        detections = body.get("detections")
        _require(isinstance(detections, list), f"bad detections {detections!r}")
        original = self._study.original_size
        objects = []
        for det in detections:
            _require(isinstance(det, dict), f"bad detection {det!r}")
            bbox = det.get("bbox")
            _require(
                isinstance(bbox, list) and len(bbox) == 4 and all(isinstance(v, (int, float)) for v in bbox),
                f"bad bbox {bbox!r}",
            )
            confidence = det.get("confidence")
            _require(isinstance(confidence, (int, float)), f"bad confidence {confidence!r}")
            _require(0.0 <= confidence <= 1.0, f"confidence {confidence!r} outside [0, 1]")
            left, lower, right, upper = bbox
            _require(left <= right and lower <= upper, f"inverted bbox {bbox!r}")
            if frame != tuple(original):
                left, lower, right, upper = rescale_coords((left, lower, right, upper), frame, original)
            # clip float fuzz so outputs satisfy the coordinate invariants
            left = min(max(left, 0.0), original[0])
            right = min(max(right, 0.0), original[0])
            lower = min(max(lower, 0.0), original[1])
            upper = min(max(upper, 0.0), original[1])
            objects.append(CxrObject(object_name, (left, lower, right, upper), float(confidence)))
        self._find_cache[object_name] = objects
        return objects

    def exists(self, object_name: str) -> tuple[bool, float]:
        body = self._client.post("/v1/exists", self._payload(object_name))
        _require(isinstance(body.get("exists"), bool), f"bad exists {body.get('exists')!r}")
        confidence = body.get("confidence")
        _require(isinstance(confidence, (int, float)), f"bad confidence {confidence!r}")
        _require(0.0 <= confidence <= 1.0, f"confidence {confidence!r} outside [0, 1]")
        # presence verdict is derived from find() so the two stay consistent
        return bool(self.find(object_name)), float(confidence)

    def segment(self, object_name: str) -> CxrSegmentation:
        body = self._client.post("/v1/segment", self._payload(object_name))
        frame_w, frame_h = _parse_image_size(body)
        runs = body.get("rle")
        _require(isinstance(runs, list) and all(isinstance(v, int) for v in runs), f"bad rle {runs!r}")
        starts_with = body.get("starts_with")
        _require(starts_with in (0, 1), f"bad starts_with {starts_with!r}")
        try:
            mask = rle.decode(frame_w, frame_h, runs, starts_with)
        except ValueError as exc:
            raise ProtocolViolation(str(exc)) from exc
        original_w, original_h = self._study.original_size
        if (frame_w, frame_h) != (original_w, original_h):
            ys = (np.arange(original_h) * frame_h // original_h).astype(int)
            xs = (np.arange(original_w) * frame_w // original_w).astype(int)
            mask = mask[np.ix_(ys, xs)]
        return CxrSegmentation.from_mask(object_name, mask)

    def tool_for(self, object_name: str) -> str:
        return f"http:{self._client.base_url}"


# ---------------------------------------------------------------------------
# Routing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoutingTable:
    """Object-name patterns (exact or glob) mapped to backend ids."""

    patterns: dict[str, str]
    default: str

    def route(self, object_name: str) -> str:
        matches = [
            pattern
            for pattern in self.patterns
            if pattern == object_name or fnmatch.fnmatchcase(object_name, pattern)
        ]
        if not matches:
            return self.default
        # longest pattern wins; lexicographic order breaks ties
        best = sorted(matches, key=lambda p: (-len(p), p))[0]
        return self.patterns[best]

    def backend_ids(self) -> set[str]:
        return set(self.patterns.values()) | {self.default}


def route(table: RoutingTable, object_name: str) -> str:
    return table.route(object_name)


class RoutedBackend:
    """Dispatches each object name to the backend its routing entry names."""

    def __init__(self, table: RoutingTable, backends: dict[str, ToolBackend]):
        missing = table.backend_ids() - set(backends)
        if missing:
            raise ValueError(f"routing table references unregistered backends: {sorted(missing)}")
        self._table = table
        self._backends = backends

    def _delegate(self, object_name: str) -> ToolBackend:
        return self._backends[self._table.route(object_name)]

    def exists(self, object_name: str) -> tuple[bool, float]:
        return self._delegate(object_name).exists(object_name)

    def find(self, object_name: str) -> list[CxrObject]:
        return self._delegate(object_name).find(object_name)

    def segment(self, object_name: str) -> CxrSegmentation:
        return self._delegate(object_name).segment(object_name)

    def tool_for(self, object_name: str) -> str:
        backend_id = self._table.route(object_name)
        return f"{backend_id}:{self._backends[backend_id].tool_for(object_name)}"
