#!/usr/bin/env python3
"""Print per-period uncertainty shares (prior, structure, parameter) for the synthetic station."""

import argparse

from floodbayes.bayes import ChainConfig
from floodbayes.fixtures import data_path
from floodbayes.hazard import DEFAULT_PERIODS, CovariateRef
from floodbayes.ingest import align, load_annual_maxima, load_monthly_index, seasonal_mean_covariate
from floodbayes.uq import decompose, grid_from_ensembles, run_cells

PRIORS = ("uniform", "gauss-wide", "gauss-narrow")
STRUCTURES = ("stationary", "nonstationary")

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=20240601)
    parser.add_argument("--iterations", type=int, default=100_000)
    parser.add_argument("--burn-in", type=int, default=10_000)
    parser.add_argument("--scenarios", type=int, default=1000)
    args = parser.parse_args()

    series = load_annual_maxima(data_path("synthetic_stage.csv"))
    ds = align(series, seasonal_mean_covariate(load_monthly_index(data_path("synthetic_dmi.csv"))))
    chains = run_cells(ds, PRIORS, STRUCTURES, ChainConfig(args.seed, args.iterations, args.burn_in))
    print(f"{'T':>5} {'measure':>9} " + " ".join(f"{s:>10}" for s in ("prior", "structure", "parameter")) + f" {'total':>9}")
    for T in DEFAULT_PERIODS:
        grid = grid_from_ensembles(chains, len(PRIORS), len(STRUCTURES), T, CovariateRef(), ds, args.scenarios)
        for measure in ("range", "variance"):
            d = decompose(grid, measure)
            shares = " ".join(f"{v:>10.3f}" for v in d.shares())
            print(f"{T:>5} {measure:>9} {shares} {d.total:>9.4f}")
