#!/usr/bin/env python3
"""Run the full verify + inject + eval flow over the golden dataset via the CLI.

Demonstrates the per-stage commands and prints the resulting comparison
table; useful as a quick end-to-end sanity check after changes.
"""

import argparse
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests/data/golden"


def run(cmd: list[str]):
    print("+", " ".join(cmd))
    subprocess.run(cmd, check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--golden", default=str(GOLDEN))
    parser.add_argument("--format", choices=("csv", "md", "txt"), default="txt")
    args = parser.parse_args()

    golden = Path(args.golden)
    manifest = golden / "manifest.jsonl"
    fixtures = golden / "fixtures.tsv"
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        run([sys.executable, "-m", "chexfix.cli", "run", "--manifest", str(manifest),
             "--backend", f"fixtures:{fixtures}", "--out", str(out / "run")])
        run([sys.executable, "-m", "chexfix.cli", "inject-gt", "--manifest", str(manifest),
             "--annotations", str(fixtures), "--out", str(out / "gt.jsonl")])
        run([sys.executable, "-m", "chexfix.cli", "eval", "--manifest", str(manifest),
             "--updated", str(out / "run/updated.jsonl"), "--gt", str(out / "gt.jsonl"),
             "--out", str(out / "metrics"), "--format", args.format])


if __name__ == "__main__":
    main()
