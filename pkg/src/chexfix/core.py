"""Shared domain types plus pixel/physical geometry.

The canonical coordinate frame is original-image pixels: pixel spacing is
defined only for the original image, so every backend adapter converts
into this frame before anything downstream sees a coordinate.  All types
here are immutable values and safe to share across threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import rle
from .errors import InvalidGeometry

Bbox = tuple[float, float, float, float]  # (left, lower, right, upper)
Dims = tuple[int, int]  # (width_px, height_px)
Spacing = tuple[float, float]  # (mm per px in x, mm per px in y)


class PlacementVerdict(enum.Enum):
    """Tube-position call; everything but CORRECT binarizes to incorrect."""

    CORRECT = "correct"
    TOO_LOW = "too low"
    TOO_HIGH = "too high"
    INCORRECT_UNSPECIFIED = "incorrect"

    @property
    def is_correct(self) -> bool:
        return self is PlacementVerdict.CORRECT


@dataclass(frozen=True)
class StudyRecord:
    """One image's metadata plus the ground-truth and per-model report texts."""

    study_id: str
    image_ref: str
    original_size: Dims
    pixel_spacing: Spacing
    ground_truth_report: str
    model_reports: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        w, h = self.original_size
        if w < 1 or h < 1:
            raise ValueError(f"{self.study_id}: original_size must be >= 1, got {self.original_size}")
        sx, sy = self.pixel_spacing
        if not (sx > 0 and sy > 0) or not (math.isfinite(sx) and math.isfinite(sy)):
            raise ValueError(f"{self.study_id}: pixel_spacing must be positive, got {self.pixel_spacing}")
        if not self.ground_truth_report:
            raise ValueError(f"{self.study_id}: ground_truth_report must be non-empty")
        object.__setattr__(self, "model_reports", MappingProxyType(dict(self.model_reports)))


@dataclass(frozen=True)
class CxrObject:
    """A detected object: bounding box or point in original-image pixels."""

    object_name: str
    bbox: Bbox
    confidence: float

    def __post_init__(self):
        left, lower, right, upper = self.bbox
        if not all(math.isfinite(v) for v in self.bbox):
            raise ValueError(f"{self.object_name}: non-finite bbox {self.bbox}")
        if left > right or lower > upper:
            raise ValueError(f"{self.object_name}: inverted bbox {self.bbox}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"{self.object_name}: confidence {self.confidence} outside [0, 1]")

    @property
    def is_point(self) -> bool:
        left, lower, right, upper = self.bbox
        return left == right and lower == upper

    @property
    def center(self) -> tuple[float, float]:
        left, lower, right, upper = self.bbox
        return (left + right) / 2.0, (lower + upper) / 2.0

    @property
    def width_px(self) -> float:
        return self.bbox[2] - self.bbox[0]

    @property
    def height_px(self) -> float:
        return self.bbox[3] - self.bbox[1]

    @property
    def area_px(self) -> float:
        return self.width_px * self.height_px


@dataclass(frozen=True)
class CxrSegmentation:
    """A binary region mask, stored run-length encoded (zero-first runs)."""

    object_name: str
    width: int
    height: int
    runs: tuple[int, ...]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"{self.object_name}: mask dims must be >= 1")
        total = sum(self.runs)
        if total != self.width * self.height:
            raise ValueError(
                f"{self.object_name}: runs sum to {total}, expected {self.width * self.height}"
            )
        if any(r < 0 for r in self.runs):
            raise ValueError(f"{self.object_name}: negative run length")

    @classmethod
    def from_mask(cls, object_name: str, mask: np.ndarray) -> "CxrSegmentation":
        arr = np.asarray(mask).astype(bool)
        if arr.ndim != 2:
            raise ValueError("mask must be 2-D")
        h, w = arr.shape
        return cls(object_name, w, h, tuple(rle.encode_zero_first(arr)))

    @classmethod
    def empty(cls, object_name: str, width: int, height: int) -> "CxrSegmentation":
        return cls(object_name, width, height, (width * height,))

    def to_mask(self) -> np.ndarray:
        return rle.decode(self.width, self.height, self.runs, starts_with=0)

    @property
    def is_empty(self) -> bool:
        return sum(self.runs[1::2]) == 0

    @cached_property
    def _mask(self) -> np.ndarray:
        m = self.to_mask()
        m.setflags(write=False)
        return m

    def pixel_width(self) -> int:
        """Widest horizontal extent over rows, in pixels."""
        m = self._mask
        rows = m.any(axis=1)
        if not rows.any():
            return 0
        first = m.argmax(axis=1)
        last = m.shape[1] - 1 - m[:, ::-1].argmax(axis=1)
        return int((last - first + 1)[rows].max())

    def pixel_height(self) -> int:
        """Tallest vertical extent over columns, in pixels."""
        m = self._mask
        cols = m.any(axis=0)
        if not cols.any():
            return 0
        first = m.argmax(axis=0)
        last = m.shape[0] - 1 - m[::-1, :].argmax(axis=0)
        return int((last - first + 1)[cols].max())

    def contains(self, x: float, y: float) -> bool:
        """True when the (possibly fractional) point rounds into the region."""
        ix = int(math.floor(x + 0.5))
        iy = int(math.floor(y + 0.5))
        if ix < 0 or iy < 0 or ix >= self.width or iy >= self.height:
            return False
        return bool(self._mask[iy, ix])


def px_distance_to_cm(dx_px: float, dy_px: float, spacing: Spacing) -> float:
    """Physical length in cm of a pixel displacement under anisotropic spacing."""
    sx, sy = spacing
    for v in (dx_px, dy_px, sx, sy):
        if not math.isfinite(v):
            raise InvalidGeometry(f"non-finite geometry input {v!r}")
    if sx <= 0 or sy <= 0:
        raise InvalidGeometry(f"pixel spacing must be positive, got {spacing}")
    return math.hypot(dx_px * sx, dy_px * sy) / 10.0


def object_distance_cm(a: CxrObject, b: CxrObject, spacing: Spacing) -> float:
    """Center-to-center distance between two objects in cm."""
    ax, ay = a.center
    bx, by = b.center
    return px_distance_to_cm(ax - bx, ay - by, spacing)


def bbox_size_cm(obj: CxrObject, spacing: Spacing) -> tuple[float, float]:
    """Bounding-box (width_cm, height_cm); a point has zero size."""
    sx, sy = spacing
    if sx <= 0 or sy <= 0:
        raise InvalidGeometry(f"pixel spacing must be positive, got {spacing}")
    return obj.width_px * sx / 10.0, obj.height_px * sy / 10.0


def rescale_coords(bbox: Bbox, from_dims: Dims, to_dims: Dims) -> Bbox:
    """Rescale a bbox between image frames, per-axis, preserving point-ness."""
    fw, fh = from_dims
    tw, th = to_dims
    if fw < 1 or fh < 1 or tw < 1 or th < 1:
        raise InvalidGeometry(f"image dims must be >= 1, got {from_dims} -> {to_dims}")
    if not all(math.isfinite(v) for v in bbox):
        raise InvalidGeometry(f"non-finite bbox {bbox}")
    kx = tw / fw
    ky = th / fh
    left, lower, right, upper = bbox
    return (left * kx, lower * ky, right * kx, upper * ky)
