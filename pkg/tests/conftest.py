"""Shared fixtures: studies, fixture files, and golden dataset paths."""

from __future__ import annotations

from pathlib import Path

import pytest

from chexfix.backends import FixtureStore
from chexfix.core import StudyRecord

GOLDEN_DIR = Path(__file__).parent / "data" / "golden"


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture()
def study() -> StudyRecord:
    return StudyRecord(
        study_id="s1",
        image_ref="images/s1.png",
        original_size=(2048, 2048),
        pixel_spacing=(0.5, 0.5),
        ground_truth_report="Endotracheal tube tip measures 3.0 cm above the carina.",
        model_reports={"m": "The endotracheal tube is in place."},
    )


SIMPLE_FIXTURE = """\
# test fixtures
s1\t__size__\t2048,2048
s1\tendotracheal tube\t100.0,200.0,100.0,200.0\t0.98
s1\tcarina\t100.0,260.0,100.0,260.0\t0.99
s1\tnodule\t0.0,0.0,40.0,20.0\t0.75
s1\tnodule\t500.0,500.0,520.0,520.0\t0.60
s2\t__size__\t100,80
s2\tleft lung\tMASK\t100,80\t1010 30 70 30 70 30 70 30 70 30 6560
"""


@pytest.fixture()
def fixture_file(tmp_path) -> Path:
    path = tmp_path / "fixtures.tsv"
    path.write_text(SIMPLE_FIXTURE, encoding="utf-8")
    return path


@pytest.fixture()
def fixture_store(fixture_file) -> FixtureStore:
    return FixtureStore(fixture_file)
