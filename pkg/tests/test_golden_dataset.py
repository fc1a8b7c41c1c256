"""The committed golden dataset must match a fresh regeneration."""

import json
from pathlib import Path

from chexfix.synthetic import make_golden_dataset

GOLDEN = Path(__file__).parent / "data" / "golden"


def test_committed_dataset_matches_generator(tmp_path):
    dataset = make_golden_dataset()
    dataset.write(tmp_path)
    for name in ("manifest.jsonl", "fixtures.tsv", "expected.json"):
        assert (tmp_path / name).read_bytes() == (GOLDEN / name).read_bytes(), name


def test_expected_stats_are_self_consistent():
    expected = json.loads((GOLDEN / "expected.json").read_text())
    assert expected["n_studies"] == 50
    assert expected["n_with_tube"] == 40
    for model, stats in expected["models"].items():
        assert stats["updated_mae"] <= 0.05, model
        assert stats["original_mae"] > 1.0, model
        assert stats["n_measured_cases"] > 0, model
