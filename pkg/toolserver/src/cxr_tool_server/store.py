"""Fixture store: parses the shared annotation format and answers lookups.

The format is line-delimited, tab-separated, hand-editable:

    study_id<TAB>object_name<TAB>l,lo,r,u<TAB>confidence
    study_id<TAB>object_name<TAB>MASK<TAB>w,h<TAB>rle runs (space separated, zero-first)
    study_id<TAB>__size__<TAB>w,h

Blank lines and '#' comments are skipped.  This parser is intentionally
independent of any client-side implementation so differential tests pit
two separate readings of the format against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

SIZE_RECORD = "__size__"
MASK_MARKER = "MASK"


class FixtureFormatError(ValueError):
    def __init__(self, message: str, path: str, line: int | None = None):
        self.path = path
        self.line = line
        location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(location + message)


@dataclass(frozen=True)
class Detection:
    bbox: tuple[float, float, float, float]  # (left, lower, right, upper)
    confidence: float


@dataclass(frozen=True)
class Mask:
    width: int
    height: int
    runs: tuple[int, ...]  # zero-first run lengths over row-major order


@dataclass
class StudyFixtures:
    study_id: str
    detections: dict[str, list[Detection]] = field(default_factory=dict)
    masks: dict[str, Mask] = field(default_factory=dict)
    size: tuple[int, int] | None = None

    def frame_size(self) -> tuple[int, int] | None:
        """Serving frame: the size record, else any mask's dimensions."""
        if self.size is not None:
            return self.size
        for mask in self.masks.values():
            return (mask.width, mask.height)
        return None


class FixtureStore:
    def __init__(self, path: str | Path):
        self.path = str(path)
        self.studies: dict[str, StudyFixtures] = {}
        self._load()

    def _study(self, study_id: str) -> StudyFixtures:
        if study_id not in self.studies:
            self.studies[study_id] = StudyFixtures(study_id)
        return self.studies[study_id]

    def _load(self):
        try:
            lines = Path(self.path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise FixtureFormatError(f"cannot read fixture file: {exc}", self.path) from exc
        for lineno, raw in enumerate(lines, start=1):
            if not raw.strip() or raw.lstrip().startswith("#"):
                continue
            parts = raw.split("\t")
            try:
                self._parse_record(parts)
            except (ValueError, IndexError) as exc:
                if isinstance(exc, FixtureFormatError):
                    raise
                raise FixtureFormatError(str(exc), self.path, lineno) from exc
        self._validate()

    def _parse_record(self, parts: list[str]):
        if len(parts) == 3 and parts[1] == SIZE_RECORD:
            w, h = (int(v) for v in parts[2].split(","))
            if w < 1 or h < 1:
                raise ValueError(f"frame size must be >= 1, got {w}x{h}")
            self._study(parts[0]).size = (w, h)
        elif len(parts) == 5 and parts[2] == MASK_MARKER:
            w, h = (int(v) for v in parts[3].split(","))
            runs = tuple(int(v) for v in parts[4].split())
            if any(r < 0 for r in runs):
                raise ValueError("negative run length")
            if sum(runs) != w * h:
                raise ValueError(f"runs sum to {sum(runs)}, expected {w * h}")
            self._study(parts[0]).masks[parts[1]] = Mask(w, h, runs)
        elif len(parts) == 4:
            coords = [float(v) for v in parts[2].split(",")]
            if len(coords) != 4:
                raise ValueError(f"expected 4 coordinates, got {len(coords)}")
            left, lower, right, upper = coords
            if left > right or lower > upper:
                raise ValueError(f"inverted bbox {parts[2]!r}")
            confidence = float(parts[3])
            if not 0.0 <= confidence <= 1.0:
                raise ValueError(f"confidence {confidence} outside [0, 1]")
            study = self._study(parts[0])
            study.detections.setdefault(parts[1], []).append(
                Detection((left, lower, right, upper), confidence)
            )
        else:
            raise ValueError(f"unrecognized record with {len(parts)} fields")

    def _validate(self):
        for study in self.studies.values():
            if study.size is None:
                continue
            w, h = study.size
            for name, detections in study.detections.items():
                for det in detections:
                    left, lower, right, upper = det.bbox
                    if left < 0 or lower < 0 or right > w or upper > h:
                        raise FixtureFormatError(
                            f"{study.study_id}/{name}: bbox {det.bbox} outside {w}x{h}", self.path
                        )
            for name, mask in study.masks.items():
                if (mask.width, mask.height) != (w, h):
                    raise FixtureFormatError(
                        f"{study.study_id}/{name}: mask {mask.width}x{mask.height} "
                        f"does not match frame {w}x{h}",
                        self.path,
                    )
