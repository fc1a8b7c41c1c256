#!/usr/bin/env python3
"""Regenerate the committed golden dataset (manifest, fixtures, expected stats).

The dataset is deterministic for a given seed; tests compare the committed
copy against a regeneration, so rerun this script whenever the generator
changes and commit the result.
"""

import argparse
from pathlib import Path

from chexfix.synthetic import make_golden_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests/data/golden"))
    parser.add_argument("--seed", type=int, default=20240801)
    parser.add_argument("--studies", type=int, default=50)
    args = parser.parse_args()

    dataset = make_golden_dataset(seed=args.seed, n_studies=args.studies)
    dataset.write(args.out)
    print(f"wrote {args.studies}-study dataset to {args.out}")


if __name__ == "__main__":
    main()
