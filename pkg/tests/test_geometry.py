"""Pixel geometry: distance conversion and coordinate rescaling."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chexfix.core import (
    CxrObject,
    StudyRecord,
    bbox_size_cm,
    object_distance_cm,
    px_distance_to_cm,
    rescale_coords,
)
from chexfix.errors import InvalidGeometry


class TestPxDistanceToCm:
    def test_coincident_points(self):
        assert px_distance_to_cm(0.0, 0.0, (0.139, 0.139)) == 0.0

    def test_isotropic_pythagorean(self):
        # 30 px * 0.5 mm = 15 mm, 40 px * 0.5 mm = 20 mm, hypotenuse 25 mm
        assert px_distance_to_cm(30, 40, (0.5, 0.5)) == pytest.approx(2.5, rel=1e-12)

    def test_anisotropic_uses_per_axis_spacing(self):
        # x displacement only: 10 px * 1.0 mm = 10 mm = 1 cm
        assert px_distance_to_cm(10, 0, (1.0, 2.0)) == pytest.approx(1.0, rel=1e-12)

    def test_nonfinite_raises(self):
        with pytest.raises(InvalidGeometry):
            px_distance_to_cm(float("nan"), 0.0, (0.5, 0.5))
        with pytest.raises(InvalidGeometry):
            px_distance_to_cm(1.0, float("inf"), (0.5, 0.5))

    def test_bad_spacing_raises(self):
        with pytest.raises(InvalidGeometry):
            px_distance_to_cm(1.0, 1.0, (0.0, 0.5))
        with pytest.raises(InvalidGeometry):
            px_distance_to_cm(1.0, 1.0, (0.5, -0.1))

    @given(
        dx=st.floats(-1e4, 1e4),
        dy=st.floats(-1e4, 1e4),
        sx=st.floats(0.01, 5.0),
        sy=st.floats(0.01, 5.0),
    )
    def test_sign_symmetry(self, dx, dy, sx, sy):
        d = px_distance_to_cm(dx, dy, (sx, sy))
        assert d == px_distance_to_cm(-dx, dy, (sx, sy))
        assert d == px_distance_to_cm(dx, -dy, (sx, sy))
        assert d >= 0.0

    @given(
        points=st.lists(
            st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=3, max_size=3
        ),
        sx=st.floats(0.05, 2.0),
        sy=st.floats(0.05, 2.0),
    )
    def test_triangle_inequality(self, points, sx, sy):
        (ax, ay), (bx, by), (cx, cy) = points
        spacing = (sx, sy)
        ab = px_distance_to_cm(ax - bx, ay - by, spacing)
        bc = px_distance_to_cm(bx - cx, by - cy, spacing)
        ac = px_distance_to_cm(ax - cx, ay - cy, spacing)
        assert ac <= ab + bc + 1e-9


class TestRescaleCoords:
    def test_identity(self):
        assert rescale_coords((0, 0, 100, 100), (200, 200), (200, 200)) == (0, 0, 100, 100)

    def test_independent_axis_scaling_preserves_points(self):
        out = rescale_coords((10, 10, 10, 10), (100, 100), (400, 200))
        assert out == (40, 20, 40, 20)
        assert out[0] == out[2] and out[1] == out[3]

    def test_round_trip(self):
        bbox = (3.0, 7.0, 21.0, 35.0)
        there = rescale_coords(bbox, (128, 256), (512, 512))
        back = rescale_coords(there, (512, 512), (128, 256))
        assert back == pytest.approx(bbox, abs=1e-9)

    def test_zero_dims_raise(self):
        with pytest.raises(InvalidGeometry):
            rescale_coords((0, 0, 1, 1), (0, 100), (10, 10))
        with pytest.raises(InvalidGeometry):
            rescale_coords((0, 0, 1, 1), (100, 100), (10, 0))

    @given(
        left=st.floats(0, 500),
        lower=st.floats(0, 500),
        w=st.floats(0, 100),
        h=st.floats(0, 100),
        dims=st.tuples(st.integers(1, 4096), st.integers(1, 4096)),
        mid=st.tuples(st.integers(1, 4096), st.integers(1, 4096)),
        out=st.tuples(st.integers(1, 4096), st.integers(1, 4096)),
    )
    def test_composition(self, left, lower, w, h, dims, mid, out):
        bbox = (left, lower, left + w, lower + h)
        direct = rescale_coords(bbox, dims, out)
        chained = rescale_coords(rescale_coords(bbox, dims, mid), mid, out)
        for a, b in zip(direct, chained):
            assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


class TestCxrObject:
    def test_point_detection_and_center(self):
        point = CxrObject("carina", (100.0, 260.0, 100.0, 260.0), 0.99)
        assert point.is_point
        assert point.center == (100.0, 260.0)
        box = CxrObject("nodule", (0.0, 0.0, 40.0, 20.0), 0.7)
        assert not box.is_point
        assert box.center == (20.0, 10.0)

    def test_invalid_bbox_rejected(self):
        with pytest.raises(ValueError):
            CxrObject("x", (10.0, 0.0, 0.0, 0.0), 0.5)
        with pytest.raises(ValueError):
            CxrObject("x", (0.0, 0.0, 1.0, 1.0), 1.5)

    def test_bbox_size_cm(self):
        box = CxrObject("nodule", (0.0, 0.0, 40.0, 20.0), 0.7)
        assert bbox_size_cm(box, (1.0, 1.0)) == (4.0, 2.0)

    def test_object_distance_between_centers(self):
        a = CxrObject("a", (90.0, 190.0, 110.0, 210.0), 0.9)  # center (100, 200)
        b = CxrObject("b", (100.0, 260.0, 100.0, 260.0), 0.9)
        assert object_distance_cm(a, b, (0.5, 0.5)) == pytest.approx(3.0, rel=1e-12)


class TestStudyRecord:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            StudyRecord("s", "i", (0, 10), (0.5, 0.5), "report")
        with pytest.raises(ValueError):
            StudyRecord("s", "i", (10, 10), (0.0, 0.5), "report")
        with pytest.raises(ValueError):
            StudyRecord("s", "i", (10, 10), (0.5, 0.5), "")

    def test_model_reports_immutable(self, study):
        with pytest.raises(TypeError):
            study.model_reports["new"] = "text"  # type: ignore[index]
