#!/usr/bin/env python3
"""Regenerate the bundled synthetic data files under src/floodbayes/data/."""

import argparse
from pathlib import Path

from floodbayes.fixtures import write_fixtures

DEFAULT_DIR = Path(__file__).resolve().parents[1] / "src" / "floodbayes" / "data"

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=DEFAULT_DIR)
    args = parser.parse_args()
    for path in write_fixtures(args.out):
        print(path)
