"""Run-length coding for binary masks.

Runs are taken over the row-major flattening of the mask (x fastest).
Two conventions exist side by side:

* wire form: ``(starts_with, runs)`` where ``runs[0]`` counts pixels of
  value ``starts_with`` and values alternate afterwards;
* zero-first form: a bare run list that always starts counting zeros, so
  a mask whose first pixel is 1 leads with a 0-length run.  Fixture files
  use this form because it needs no extra field.
"""

from __future__ import annotations

import numpy as np


def encode(mask: np.ndarray) -> tuple[int, list[int]]:
    """Encode a binary mask into ``(starts_with, runs)``."""
    flat = np.asarray(mask).astype(bool).ravel()
    if flat.size == 0:
        return 0, []
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).astype(int).tolist()
    return int(flat[0]), runs


def encode_zero_first(mask: np.ndarray) -> list[int]:
    """Encode a binary mask as a run list starting with a zero-run."""
    starts_with, runs = encode(mask)
    if starts_with == 1:
        return [0] + runs
    return runs


def decode(width: int, height: int, runs: list[int] | tuple[int, ...], starts_with: int = 0) -> np.ndarray:
    """Decode runs into a ``(height, width)`` boolean array.

    Raises ValueError when runs are negative or do not sum to width*height.
    """
    if width < 1 or height < 1:
        raise ValueError(f"mask dims must be >= 1, got {width}x{height}")
    runs = list(runs)
    if any(r < 0 for r in runs):
        raise ValueError("negative run length")
    total = sum(runs)
    if total != width * height:
        raise ValueError(f"run lengths sum to {total}, expected {width * height}")
    if starts_with not in (0, 1):
        raise ValueError(f"starts_with must be 0 or 1, got {starts_with}")
    values = np.zeros(len(runs), dtype=bool)
    values[0::2] = bool(starts_with)
    values[1::2] = not bool(starts_with)
    flat = np.repeat(values, runs)
    return flat.reshape(height, width)
