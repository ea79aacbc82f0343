#!/usr/bin/env python3
"""Run the full report pipeline on the bundled synthetic station."""

import argparse
import sys

from floodbayes.cli import main
from floodbayes.fixtures import data_path

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="report_out")
    parser.add_argument("--seed", type=int, default=20240601)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    sys.exit(main([
        "report",
        "--stage", str(data_path("synthetic_stage.csv")),
        "--index", str(data_path("synthetic_dmi.csv")),
        "--meta", str(data_path("synthetic_meta.json")),
        "--seed", str(args.seed),
        "--workers", str(args.workers),
        "--out-dir", args.out_dir,
    ]))
