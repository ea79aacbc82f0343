import numpy as np
import pytest

from floodbayes.fixtures import data_path
from floodbayes.ingest import align, load_annual_maxima, load_monthly_index, seasonal_mean_covariate, load_station_meta

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture(scope="session")
def synthetic_dataset():
    meta = load_station_meta(data_path("synthetic_meta.json"))
    series = load_annual_maxima(data_path("synthetic_stage.csv"), meta=meta)
    cov = seasonal_mean_covariate(load_monthly_index(data_path("synthetic_dmi.csv")))
    return align(series, cov)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
