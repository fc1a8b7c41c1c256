"""Plan compilation shapes and execution semantics."""

import random

import numpy as np
import pytest

from chexfix.backends import FixtureAnnotation, FixtureBackend
from chexfix.core import CxrObject, CxrSegmentation, StudyRecord
from chexfix.errors import BackendUnavailable, PlanError
from chexfix.planner import (
    Diameter,
    Dims,
    Distance,
    Exists,
    Failed,
    Filter,
    Find,
    GuardNonEmpty,
    NotPresent,
    Plan,
    PlanExecutor,
    Scalar,
    Segment,
    Width,
    compile,
    execute,
    select_one,
)
from chexfix.queries import MeasurementQuery, QueryKind


def make_study(**overrides):
    defaults = dict(
        study_id="s1",
        image_ref="img",
        original_size=(2048, 2048),
        pixel_spacing=(0.5, 0.5),
        ground_truth_report="r",
        model_reports={},
    )
    defaults.update(overrides)
    return StudyRecord(**defaults)


def backend_with(study, boxes=None, masks=None):
    annotation = FixtureAnnotation(study.study_id, boxes or {}, masks or {})
    return FixtureBackend(annotation, study)


DISTANCE_QUERY = MeasurementQuery(QueryKind.DISTANCE_BETWEEN, "endotracheal tube", "carina")


class TestCompile:
    def test_distance_plan_golden_shape(self):
        plan = compile(DISTANCE_QUERY)
        assert plan.steps == (
            Find("endotracheal tube"),
            Find("carina"),
            GuardNonEmpty((0, 1)),
            Distance(0, 1),
        )

    def test_existence_plan(self):
        plan = compile(MeasurementQuery(QueryKind.EXISTENCE_OF, "endotracheal tube"))
        assert plan.steps == (Exists("endotracheal tube"),)

    def test_region_query_segments_then_filters(self):
        plan = compile(MeasurementQuery(QueryKind.DIAMETER_OF, "nodule", region="left lung"))
        kinds = [type(s).__name__ for s in plan.steps]
        assert "Segment" in kinds and "Filter" in kinds
        assert kinds.index("Segment") < kinds.index("Filter")
        assert isinstance(plan.steps[-1], Diameter)

    def test_width_plan_over_segment(self):
        plan = compile(MeasurementQuery(QueryKind.WIDTH_OF, "pneumothorax", region="right apical"))
        assert isinstance(plan.steps[0], Segment)
        assert isinstance(plan.steps[-1], Width)

    def test_plans_validate(self):
        for kind in QueryKind:
            query = MeasurementQuery(
                kind,
                "nodule" if kind is not QueryKind.DISTANCE_BETWEEN else "endotracheal tube",
                reference="carina" if kind is QueryKind.DISTANCE_BETWEEN else None,
            )
            compile(query)  # Plan.__post_init__ validates shape


class TestPlanValidation:
    def test_forward_reference_rejected(self):
        with pytest.raises(PlanError):
            Plan(DISTANCE_QUERY, (Find("a"), Distance(0, 2), Find("b"), GuardNonEmpty((0,))))

    def test_type_mismatch_rejected(self):
        with pytest.raises(PlanError):
            Plan(DISTANCE_QUERY, (Segment("a"), Find("b"), Distance(0, 1)))

    def test_result_type_must_match_query(self):
        with pytest.raises(PlanError):
            Plan(DISTANCE_QUERY, (Find("a"),))


class TestExecute:
    def test_distance_from_points(self):
        study = make_study()
        backend = backend_with(
            study,
            boxes={
                "endotracheal tube": (((100.0, 200.0, 100.0, 200.0), 0.98),),
                "carina": (((100.0, 260.0, 100.0, 260.0), 0.99),),
            },
        )
        result = execute(compile(DISTANCE_QUERY), study, backend)
        assert isinstance(result.outcome, Scalar)
        assert result.outcome.value == pytest.approx(3.0, rel=1e-12)
        assert [p.step for p in result.provenance][:2] == ["find(endotracheal tube)", "find(carina)"]

    def test_missing_object_short_circuits(self):
        study = make_study()
        backend = backend_with(study, boxes={"carina": (((10.0, 10.0, 10.0, 10.0), 0.9),)})
        result = execute(compile(DISTANCE_QUERY), study, backend)
        assert result.outcome == NotPresent("endotracheal tube")
        assert result.outcome.message == "endotracheal tube not present in the image."

    def test_diameter_and_dimensions(self):
        study = make_study(pixel_spacing=(1.0, 1.0))
        backend = backend_with(study, boxes={"nodule": (((0.0, 0.0, 40.0, 20.0), 0.9),)})
        diameter = execute(compile(MeasurementQuery(QueryKind.DIAMETER_OF, "nodule")), study, backend)
        dims = execute(compile(MeasurementQuery(QueryKind.DIMENSIONS_OF, "nodule")), study, backend)
        assert diameter.outcome == Scalar(4.0)
        assert dims.outcome == Dims(4.0, 2.0)

    def test_distance_symmetry_and_self_zero(self):
        study = make_study()
        backend = backend_with(
            study,
            boxes={
                "a": (((10.0, 20.0, 30.0, 40.0), 0.8),),
                "b": (((200.0, 100.0, 260.0, 160.0), 0.7),),
            },
        )
        ab = Plan(DISTANCE_QUERY, (Find("a"), Find("b"), GuardNonEmpty((0, 1)), Distance(0, 1)))
        ba = Plan(DISTANCE_QUERY, (Find("b"), Find("a"), GuardNonEmpty((0, 1)), Distance(0, 1)))
        aa = Plan(DISTANCE_QUERY, (Find("a"), Find("a"), GuardNonEmpty((0, 1)), Distance(0, 1)))
        executor = PlanExecutor(study, backend)
        assert executor.run(ab).outcome.value == executor.run(ba).outcome.value
        assert executor.run(aa).outcome == Scalar(0.0)

    def test_existence_query(self):
        study = make_study()
        backend = backend_with(study, boxes={"nodule": (((1.0, 1.0, 2.0, 2.0), 0.5),)})
        present = execute(compile(MeasurementQuery(QueryKind.EXISTENCE_OF, "nodule")), study, backend)
        missing = execute(compile(MeasurementQuery(QueryKind.EXISTENCE_OF, "mass")), study, backend)
        assert present.outcome == Scalar(1.0)
        assert missing.outcome == NotPresent("mass")

    def test_width_of_segment(self):
        study = make_study(original_size=(100, 80), pixel_spacing=(1.0, 2.0))
        mask = np.zeros((80, 100), dtype=bool)
        mask[10:15, 10:40] = True
        seg = CxrSegmentation.from_mask("pneumothorax", mask)
        backend = backend_with(study, masks={"pneumothorax": seg})
        width = execute(
            compile(MeasurementQuery(QueryKind.WIDTH_OF, "pneumothorax")), study, backend
        )
        height = execute(
            compile(MeasurementQuery(QueryKind.HEIGHT_OF, "pneumothorax")), study, backend
        )
        assert width.outcome == Scalar(3.0)  # 30 px * 1.0 mm = 30 mm
        assert height.outcome == Scalar(1.0)  # 5 px * 2.0 mm = 10 mm

    def test_empty_segment_not_present(self):
        study = make_study(original_size=(100, 80))
        backend = backend_with(study)
        result = execute(
            compile(MeasurementQuery(QueryKind.WIDTH_OF, "pneumothorax")), study, backend
        )
        assert result.outcome == NotPresent("pneumothorax")

    def test_region_filter_empties_to_not_present(self):
        study = make_study(original_size=(100, 80))
        mask = np.zeros((80, 100), dtype=bool)
        mask[0:10, 0:10] = True
        backend = backend_with(
            study,
            boxes={"nodule": (((50.0, 50.0, 60.0, 60.0), 0.9),)},
            masks={"left lung": CxrSegmentation.from_mask("left lung", mask)},
        )
        result = execute(
            compile(MeasurementQuery(QueryKind.DIAMETER_OF, "nodule", region="left lung")),
            study,
            backend,
        )
        assert result.outcome == NotPresent("nodule")

    def test_region_filter_keeps_contained(self):
        study = make_study(original_size=(100, 80), pixel_spacing=(1.0, 1.0))
        mask = np.zeros((80, 100), dtype=bool)
        mask[40:70, 40:70] = True
        backend = backend_with(
            study,
            boxes={"nodule": (((50.0, 50.0, 60.0, 60.0), 0.9),)},
            masks={"left lung": CxrSegmentation.from_mask("left lung", mask)},
        )
        result = execute(
            compile(MeasurementQuery(QueryKind.DIAMETER_OF, "nodule", region="left lung")),
            study,
            backend,
        )
        assert result.outcome == Scalar(1.0)

    def test_backend_failure_surfaces_as_failed(self):
        study = make_study()

        class ExplodingBackend:
            def exists(self, name):
                raise BackendUnavailable("boom")

            def find(self, name):
                raise BackendUnavailable("server unreachable")

            def segment(self, name):
                raise BackendUnavailable("boom")

            def tool_for(self, name):
                return "exploding"

        result = execute(compile(DISTANCE_QUERY), study, ExplodingBackend())
        assert isinstance(result.outcome, Failed)
        assert "unreachable" in result.outcome.message

    def test_min_confidence_filters_detections(self):
        study = make_study()
        backend = backend_with(study, boxes={"nodule": (((1.0, 1.0, 2.0, 2.0), 0.3),)})
        kept = execute(
            compile(MeasurementQuery(QueryKind.DIAMETER_OF, "nodule")), study, backend
        )
        dropped = execute(
            compile(MeasurementQuery(QueryKind.DIAMETER_OF, "nodule")),
            study,
            backend,
            min_confidence=0.5,
        )
        assert isinstance(kept.outcome, Scalar)
        assert dropped.outcome == NotPresent("nodule")

    def test_cache_reuses_find_results(self):
        study = make_study()
        calls = []

        class CountingBackend:
            def exists(self, name):
                return True, 1.0

            def find(self, name):
                calls.append(name)
                return [CxrObject(name, (1.0, 1.0, 1.0, 1.0), 0.9)]

            def segment(self, name):
                raise AssertionError("not used")

            def tool_for(self, name):
                return "counting"

        executor = PlanExecutor(study, CountingBackend())
        plan = compile(DISTANCE_QUERY)
        executor.run(plan)
        executor.run(plan)
        assert calls == ["endotracheal tube", "carina"]

    def test_determinism_bit_identical(self):
        study = make_study()
        backend = backend_with(
            study,
            boxes={
                "endotracheal tube": (((100.0, 200.0, 100.0, 200.0), 0.98),),
                "carina": (((100.0, 260.0, 100.0, 260.0), 0.99),),
            },
        )
        first = execute(compile(DISTANCE_QUERY), study, backend)
        second = execute(compile(DISTANCE_QUERY), study, backend)
        assert first == second


class TestSelectOne:
    def test_highest_confidence_wins(self):
        objs = [
            CxrObject("n", (0.0, 0.0, 4.0, 4.0), 0.5),
            CxrObject("n", (0.0, 0.0, 9.0, 9.0), 0.9),
        ]
        assert select_one(objs).confidence == 0.9

    def test_tie_prefers_smaller_area_then_position(self):
        small = CxrObject("n", (5.0, 5.0, 6.0, 6.0), 0.8)
        large = CxrObject("n", (0.0, 0.0, 9.0, 9.0), 0.8)
        assert select_one([large, small]) == small
        first = CxrObject("n", (1.0, 1.0, 2.0, 2.0), 0.8)
        second = CxrObject("n", (3.0, 3.0, 4.0, 4.0), 0.8)
        assert select_one([second, first]) == first


class TestFilterWithinConsistency:
    def test_every_filter_survivor_satisfies_within(self):
        rng = random.Random(1234)
        study = make_study(original_size=(64, 64), pixel_spacing=(1.0, 1.0))
        for _ in range(50):
            mask = np.zeros((64, 64), dtype=bool)
            x0, y0 = rng.randrange(0, 48), rng.randrange(0, 48)
            mask[y0 : y0 + rng.randrange(1, 16), x0 : x0 + rng.randrange(1, 16)] = True
            region = CxrSegmentation.from_mask("region", mask)
            objects = []
            for _ in range(rng.randrange(1, 8)):
                left = rng.uniform(0, 60)
                lower = rng.uniform(0, 60)
                objects.append(
                    CxrObject(
                        "nodule",
                        (left, lower, left + rng.uniform(0, 4), lower + rng.uniform(0, 4)),
                        round(rng.uniform(0.1, 1.0), 3),
                    )
                )
            survivors = [o for o in objects if region.contains(*o.center)]
            for obj in survivors:
                assert region.contains(*obj.center)
            for obj in objects:
                if obj not in survivors:
                    assert not region.contains(*obj.center)
