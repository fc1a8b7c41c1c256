"""Synthetic corpora: templated reports and a golden end-to-end dataset.

The templated renderer is the independent oracle for the extractor (it
builds a report from a known observation, so extraction must recover that
observation exactly).  The golden dataset builds a manifest, an oracle
fixture file, and perturbed model reports whose expected error statistics
are computed here, directly from the perturbation bookkeeping.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .core import PlacementVerdict, StudyRecord, px_distance_to_cm
from .extract import EttObservation
from .manifest import StudyEntry, dump_manifest_line
from .updater import Guidelines, classify_placement

_FILLERS = (
    "Lungs are clear.",
    "Heart size is normal.",
    "No pleural effusion.",
    "Mild cardiomegaly.",
    "No acute osseous abnormality.",
    "Mediastinal contours are unremarkable.",
    "There is a 1.2 cm nodule in the right upper lobe.",
    "Low lung volumes.",
)

_VALUE_TEMPLATES = (
    "Endotracheal tube tip measures approximately {value} cm {direction} the carina.",
    "The ET tube terminates {value} cm {direction} the carina.",
    "Endotracheal tube is seen {value} cm {direction} the carina.",
    "The endotracheal tube tip lies {value} cm {direction} the carina.",
)

_MENTION_TEMPLATES = (
    "The endotracheal tube is in place.",
    "An ET tube is present.",
    "Endotracheal tube is noted.",
)

_ABSENT_TEMPLATES = (
    "The patient has been extubated.",
    "No endotracheal tube is seen.",
    "The endotracheal tube has been removed.",
)

_PLACEMENT_TEMPLATES = {
    PlacementVerdict.CORRECT: (
        "The ET tube is in standard position.",
        "Endotracheal tube position is stable.",
        "The endotracheal tube is in satisfactory position.",
    ),
    PlacementVerdict.TOO_LOW: (
        "The endotracheal tube is too low.",
        "ETT is too low and should be withdrawn.",
    ),
    PlacementVerdict.TOO_HIGH: (
        "The ET tube is too high.",
        "Endotracheal tube is too high and should be advanced.",
    ),
    PlacementVerdict.INCORRECT_UNSPECIFIED: (
        "The endotracheal tube is malpositioned.",
    ),
}


def render_ett_report(obs: EttObservation, rng: random.Random, *, fillers: int = 2) -> str:
    """Render a report whose extraction recovers the observation exactly."""
    sentences: list[str] = []
    if not obs.present:
        sentences.append(rng.choice(_ABSENT_TEMPLATES))
    else:
        if obs.measurement_cm is not None:
            direction = "above" if obs.measurement_cm >= 0 else "below"
            value = f"{abs(obs.measurement_cm):.1f}"
            sentences.append(rng.choice(_VALUE_TEMPLATES).format(value=value, direction=direction))
        else:
            sentences.append(rng.choice(_MENTION_TEMPLATES))
        if obs.placement is not None:
            sentences.append(rng.choice(_PLACEMENT_TEMPLATES[obs.placement]))
    padding = [rng.choice(_FILLERS) for _ in range(fillers)]
    for filler in padding:
        sentences.insert(rng.randrange(len(sentences) + 1), filler)
    return " ".join(sentences)


def random_observation(rng: random.Random) -> EttObservation:
    """A random observation limited to renderable states."""
    roll = rng.random()
    if roll < 0.2:
        return EttObservation(present=False)
    measurement = None
    if rng.random() < 0.75:
        measurement = round(rng.uniform(0.5, 9.5), 1)
        if rng.random() < 0.15:
            measurement = -measurement
    placement = None
    if rng.random() < 0.5:
        placement = rng.choice(list(PlacementVerdict))
    return EttObservation(present=True, measurement_cm=measurement, placement=placement)


# ---------------------------------------------------------------------------
# Golden dataset
# ---------------------------------------------------------------------------

PERTURBATION_KINDS = ("wrong_value", "missing_measurement", "correct", "no_mention")

_SIZES = ((2048, 2048), (2544, 3056), (2200, 1800))
_SPACINGS = ((0.139, 0.139), (0.168, 0.168), (0.2, 0.2))


@dataclass(frozen=True)
class GoldenDataset:
    entries: list[StudyEntry]
    fixture_lines: list[str]
    expected: dict

    def write(self, directory: str | Path):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "manifest.jsonl").write_text(
            "".join(dump_manifest_line(e) + "\n" for e in self.entries), encoding="utf-8"
        )
        (directory / "fixtures.tsv").write_text(
            "".join(line + "\n" for line in self.fixture_lines), encoding="utf-8"
        )
        (directory / "expected.json").write_text(
            json.dumps(self.expected, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _point_line(study_id: str, name: str, x: float, y: float, confidence: float) -> str:
    return f"{study_id}\t{name}\t{x!r},{y!r},{x!r},{y!r}\t{confidence:.2f}"


def _rect_mask_line(study_id: str, name: str, w: int, h: int, x0: int, y0: int, x1: int, y1: int) -> str:
    # rectangle [x0,x1) x [y0,y1) as zero-first row-major runs
    runs: list[int] = [y0 * w + x0]
    for row in range(y0, y1):
        runs.append(x1 - x0)
        if row < y1 - 1:
            runs.append(w - (x1 - x0))
    tail = w * h - (y1 - 1) * w - x1 if y1 > y0 else w * h - runs[0]
    runs.append(tail)
    return f"{study_id}\t{name}\tMASK\t{w},{h}\t{' '.join(str(r) for r in runs)}"


def make_golden_dataset(
    seed: int = 20240801,
    n_studies: int = 50,
    models: tuple[str, ...] = ("modelA", "modelB"),
    guidelines: Guidelines | None = None,
) -> GoldenDataset:
    """Build the synthetic manifest, oracle fixtures, and expected statistics.

    40 studies carry a tube (ground truth plus fixture points for the tube
    tip and carina); 10 do not (carina only).  Model reports are perturbed
    with wrong values, dropped measurements, hallucinated tubes, and
    omitted mentions; the expected error levels are recorded per model.
    """
    guidelines = guidelines or Guidelines()
    rng = random.Random(seed)
    entries: list[StudyEntry] = []
    fixture_lines: list[str] = ["# golden oracle fixtures"]
    studies_meta: dict[str, dict] = {}
    per_model: dict[str, dict] = {
        m: {"original_errors": [], "updated_errors": [], "fp_original": 0, "tp_original": 0}
        for m in models
    }

    n_with_tube = int(n_studies * 0.8)
    for index in range(n_studies):
        study_id = f"study{index:03d}"
        width, height = _SIZES[index % len(_SIZES)]
        spacing = _SPACINGS[index % len(_SPACINGS)]
        has_tube = index < n_with_tube

        carina_x = width * 0.5 + rng.uniform(-40, 40)
        carina_y = height * 0.55 + rng.uniform(-40, 40)
        fixture_lines.append(f"{study_id}\t__size__\t{width},{height}")
        fixture_lines.append(
            _point_line(study_id, "carina", carina_x, carina_y, 0.90 + rng.random() * 0.09)
        )
        if index % 10 == 0:
            fixture_lines.append(
                _rect_mask_line(study_id, "left lung", width, height, width // 8, height // 6,
                                width // 2, height * 5 // 6)
            )

        distance = None
        if has_tube:
            distance = round(rng.uniform(1.8, 8.2), 1)
            if index % 5 < 3:
                tip_x, tip_y = carina_x, carina_y - distance * 10.0 / spacing[1]
            else:
                k = 2.0 * distance
                tip_x = carina_x + 3.0 * k / spacing[0]
                tip_y = carina_y - 4.0 * k / spacing[1]
            fixture_lines.append(
                _point_line(study_id, "endotracheal tube", tip_x, tip_y, 0.90 + rng.random() * 0.09)
            )
            executed = px_distance_to_cm(tip_x - carina_x, tip_y - carina_y, spacing)
            gt_value = round(executed, 1)
        else:
            gt_value = None

        # ground truth text
        filler_pool = [f for f in _FILLERS if "nodule" not in f]
        if has_tube:
            if index % 3 == 0:
                gt_core = "The endotracheal tube is in place."  # injection path
                gt_states_value = False
            else:
                gt_core = f"Endotracheal tube tip measures {distance:.1f} cm above the carina."
                gt_states_value = True
            gt_sentences = [rng.choice(filler_pool), gt_core]
            if index % 4 == 0:
                verdict = classify_placement(distance, guidelines)
                gt_sentences.append(rng.choice(_PLACEMENT_TEMPLATES[verdict]))
        else:
            gt_states_value = False
            gt_sentences = [rng.choice(filler_pool), "No endotracheal tube is seen."]
        gt_sentences.append(rng.choice(filler_pool))
        gt_text = " ".join(gt_sentences)

        model_reports: dict[str, str] = {}
        model_kinds: dict[str, str] = {}
        for m_index, model in enumerate(models):
            stats = per_model[model]
            if has_tube:
                kind = PERTURBATION_KINDS[(index + m_index) % len(PERTURBATION_KINDS)]
                if kind == "wrong_value":
                    delta = rng.choice([-1, 1]) * round(rng.uniform(0.8, 4.0), 1)
                    stated = max(0.3, round(distance + delta, 1))
                    core = f"The ET tube terminates {stated:.1f} cm above the carina."
                    if index % 2 == 0:
                        core += " " + rng.choice(_PLACEMENT_TEMPLATES[PlacementVerdict.CORRECT])
                    stats["original_errors"].append(abs(gt_value - stated))
                    stats["updated_errors"].append(abs(gt_value - round(executed, 1)))
                    stats["tp_original"] += 1
                elif kind == "missing_measurement":
                    core = rng.choice(_MENTION_TEMPLATES)
                    stats["original_errors"].append(abs(gt_value - 0.0))
                    stats["updated_errors"].append(abs(gt_value - round(executed, 1)))
                    stats["tp_original"] += 1
                elif kind == "correct":
                    core = f"Endotracheal tube tip measures {gt_value:.1f} cm above the carina."
                    stats["original_errors"].append(0.0)
                    stats["updated_errors"].append(abs(gt_value - round(executed, 1)))
                    stats["tp_original"] += 1
                else:  # no_mention
                    core = rng.choice(filler_pool)
            else:
                if (index + m_index) % 2 == 0:
                    core = "Endotracheal tube tip measures 4.2 cm above the carina."  # hallucination
                    stats["fp_original"] += 1
                    kind = "hallucinated"
                else:
                    core = rng.choice(filler_pool)
                    kind = "correct_absent"
            report = f"{rng.choice(filler_pool)} {core} {rng.choice(_FILLERS)}"
            model_reports[model] = report
            model_kinds[model] = kind

        entries.append(
            StudyEntry(
                study=StudyRecord(
                    study_id=study_id,
                    image_ref=f"images/{study_id}.png",
                    original_size=(width, height),
                    pixel_spacing=spacing,
                    ground_truth_report=gt_text,
                    model_reports=model_reports,
                )
            )
        )
        studies_meta[study_id] = {
            "has_tube": has_tube,
            "gt_value": gt_value,
            "gt_states_value": gt_states_value,
            "kinds": model_kinds,
        }

    expected = {
        "n_studies": n_studies,
        "n_with_tube": n_with_tube,
        "models": {},
        "studies": studies_meta,
    }
    for model in models:
        stats = per_model[model]
        original_errors = stats["original_errors"]
        expected["models"][model] = {
            "original_mae": sum(original_errors) / len(original_errors),
            "updated_mae": sum(stats["updated_errors"]) / len(stats["updated_errors"]),
            "original_presence_fp": stats["fp_original"],
            "original_presence_tp": stats["tp_original"],
            "n_measured_cases": len(original_errors),
        }
    return GoldenDataset(entries=entries, fixture_lines=fixture_lines, expected=expected)
