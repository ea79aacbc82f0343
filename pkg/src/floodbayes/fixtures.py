"""Seeded synthetic records used by the tests, scripts and bundled data files."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .gev import GevParams, gev_sample
from .ingest import (
    AnnualMaximaSeries,
    MonthlyIndexSeries,
    StationMeta,
    write_annual_maxima,
    write_monthly_index,
)

SYNTHETIC_META = StationMeta(
    station_id="900",
    name="Synthetic Ghat",
    river_basin="Synthetic",
    latitude=27.5,
    longitude=85.0,
    basin_area=4000.0,
    record_start_year=1966,
    record_end_year=2015,
)

# location rises with the covariate; the covariate itself rises through the record
TREND_TRUTH = GevParams(mu0=5.0, mu1=2.0, sigma=0.6, xi=0.1)
HEAVY_TAIL_TRUTH = GevParams.stationary(mu=4.5, sigma=0.5, xi=0.25)


def step_series(seed: int = 7, n: int = 60, break_at: int = 30, level: float = 5.0, noise: float = 0.3, shift_sd: float = 3.0) -> np.ndarray:
    """Gaussian noise around ``level`` with a ``shift_sd * noise`` jump after ``break_at`` points."""
    rng = np.random.default_rng(seed)
    x = level + noise * rng.standard_normal(n)
    x[break_at:] += shift_sd * noise
    return x


def ramp_series(seed: int = 11, n: int = 50, start: float = 4.0, stop: float = 7.0, noise: float = 0.3) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.linspace(start, stop, n) + noise * rng.standard_normal(n)


def white_noise_series(seed: int = 1, n: int = 50, level: float = 5.0, noise: float = 0.5) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return level + noise * rng.standard_normal(n)


def heavy_tail_series(seed: int = 23, n: int = 45) -> np.ndarray:
    return gev_sample(n, HEAVY_TAIL_TRUTH, np.random.default_rng(seed))


def synthetic_monthly_index(seed: int = 3, start_year: int = 1960, end_year: int = 2020) -> MonthlyIndexSeries:
    """Monthly dipole-like index with a rising June-November mean."""
    rng = np.random.default_rng(seed)
    years = np.arange(start_year, end_year + 1)
    seasonal = np.linspace(-0.5, 0.7, years.size) + 0.15 * rng.standard_normal(years.size)
    entries = []
    for y, s in zip(years, seasonal):
        monthly = s + 0.2 * rng.standard_normal(12)
        for m in range(12):
            entries.append((int(y), m + 1, round(float(monthly[m]), 4)))
    return MonthlyIndexSeries(tuple(entries))


def synthetic_station(seed: int = 5, monthly: MonthlyIndexSeries | None = None) -> AnnualMaximaSeries:
    """Annual maxima 1966-2015 drawn from a GEV whose location follows the June-November index."""
    from .ingest import seasonal_mean_covariate

    monthly = monthly or synthetic_monthly_index()
    cov = seasonal_mean_covariate(monthly)
    years = np.arange(SYNTHETIC_META.record_start_year, SYNTHETIC_META.record_end_year + 1)
    phi = cov.values[np.searchsorted(cov.years, years)]
    x = gev_sample(years.size, TREND_TRUTH, np.random.default_rng(seed), covariate=phi)
    return AnnualMaximaSeries(years, np.round(x, 3), meta=SYNTHETIC_META)


def _series(values, first_year: int = 1961) -> AnnualMaximaSeries:
    values = np.round(np.asarray(values, dtype=float), 3)
    return AnnualMaximaSeries(np.arange(first_year, first_year + values.size), values)


def bundled_fixtures() -> dict[str, object]:
    """Every bundled data file keyed by file name."""
    monthly = synthetic_monthly_index()
    return {
        "synthetic_stage.csv": synthetic_station(monthly=monthly),
        "synthetic_dmi.csv": monthly,
        "synthetic_meta.json": SYNTHETIC_META,
        "step_stage.csv": _series(step_series()),
        "ramp_stage.csv": _series(ramp_series()),
        "whitenoise_stage.csv": _series(white_noise_series()),
        "heavytail_stage.csv": _series(heavy_tail_series()),
    }


def write_fixtures(directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, obj in bundled_fixtures().items():
        path = directory / name
        if isinstance(obj, AnnualMaximaSeries):
            write_annual_maxima(obj, path)
        elif isinstance(obj, MonthlyIndexSeries):
            write_monthly_index(obj, path)
        else:
            path.write_text(json.dumps(obj.to_dict(), indent=1) + "\n", encoding="utf-8")
        written.append(path)
    return written


def data_path(name: str) -> Path:
    """Path of a bundled data file."""
    return Path(str(resources.files("floodbayes") / "data" / name))
