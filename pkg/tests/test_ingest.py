import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floodbayes.errors import AlignmentError, FormatError, InsufficientDataError, ValidationError
from floodbayes.ingest import (
    AnnualMaximaSeries,
    CovariateSeries,
    MonthlyIndexSeries,
    StationMeta,
    align,
    load_annual_maxima,
    load_dataset,
    load_monthly_index,
    save_dataset,
    seasonal_mean_covariate,
    write_annual_maxima,
)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_47_year_record(tmp_path):
    years = np.arange(1969, 2016)
    values = np.linspace(4.1, 6.0, years.size)
    values[-1] = 7.2
    lines = ["year,stage_m"] + [f"{y},{float(v)!r}" for y, v in zip(years, values)]
    path = _write(tmp_path / "s.csv", "\n".join(lines) + "\n")
    series = load_annual_maxima(path)
    assert len(series) == 47
    assert series.values.max() == 7.2
    assert series.years[0] == 1969 and series.years[-1] == 2015


def test_gap_in_years_is_rejected(tmp_path):
    rows = "\n".join(f"{y},3.0" for y in range(1990, 2001)) + "\n2002,3.1\n"
    path = _write(tmp_path / "s.csv", "year,stage_m\n" + rows)
    with pytest.raises(ValidationError, match="missing year 2001"):
        load_annual_maxima(path)


def test_gap_rejected_even_below_min_length(tmp_path):
    path = _write(tmp_path / "s.csv", "year,stage_m\n2000,3.0\n2002,3.1\n")
    with pytest.raises(ValidationError, match="missing year 2001"):
        load_annual_maxima(path, min_length=2)


def test_empty_file_is_below_minimum_length(tmp_path):
    path = _write(tmp_path / "s.csv", "")
    with pytest.raises(InsufficientDataError, match="minimum length"):
        load_annual_maxima(path)


def test_parse_error_reports_line_number(tmp_path):
    path = _write(tmp_path / "s.csv", "year,stage_m\n2000,3.0\n2001,abc\n")
    with pytest.raises(FormatError) as info:
        load_annual_maxima(path)
    assert info.value.line == 3
    assert ":3" in str(info.value)


@pytest.mark.parametrize("bad", ["0", "-1.5", "nan", "inf"])
def test_nonpositive_or_nonfinite_stage(tmp_path, bad):
    rows = [f"{y},3.0" for y in range(2000, 2012)]
    rows[4] = f"2004,{bad}"
    path = _write(tmp_path / "s.csv", "year,stage_m\n" + "\n".join(rows) + "\n")
    with pytest.raises(ValidationError):
        load_annual_maxima(path)


def test_wrong_header(tmp_path):
    path = _write(tmp_path / "s.csv", "yr,stage\n2000,3.0\n")
    with pytest.raises(FormatError, match="header"):
        load_annual_maxima(path)


def test_min_length_configurable():
    with pytest.raises(InsufficientDataError):
        AnnualMaximaSeries(np.arange(2000, 2009), np.ones(9))
    s = AnnualMaximaSeries(np.arange(2000, 2005), np.ones(5), min_length=5)
    assert len(s) == 5


def test_monthly_index_loads_twelve_rows(tmp_path):
    rows = "\n".join(f"1990,{m},{m / 10}" for m in range(1, 13))
    monthly = load_monthly_index(_write(tmp_path / "i.csv", "year,month,value\n" + rows + "\n"))
    assert len(monthly) == 12
    assert monthly.entries[0] == (1990, 1, 0.1)


def test_monthly_index_month_out_of_range(tmp_path):
    with pytest.raises(ValidationError, match="month 13"):
        load_monthly_index(_write(tmp_path / "i.csv", "year,month,value\n1990,13,0.5\n"))


def test_monthly_index_duplicate(tmp_path):
    path = _write(tmp_path / "i.csv", "year,month,value\n1990,6,0.1\n1990,6,0.2\n")
    with pytest.raises(ValidationError, match="duplicate"):
        load_monthly_index(path)


def _monthly(values_by_year):
    return MonthlyIndexSeries(tuple(
        (y, m, v) for y, months in values_by_year.items() for m, v in months.items()
    ))


def test_seasonal_mean_of_constants():
    cov = seasonal_mean_covariate(_monthly({1990: {m: 0.4 for m in range(1, 13)}}))
    assert cov.years.tolist() == [1990]
    assert cov.values[0] == pytest.approx(0.4, abs=1e-15)


def test_seasonal_mean_arithmetic():
    months = {6: 0.0, 7: 0.1, 8: 0.2, 9: 0.3, 10: 0.4, 11: 0.5, 1: 9.0, 12: -9.0}
    cov = seasonal_mean_covariate(_monthly({1990: months}))
    assert cov.values[0] == pytest.approx(0.25, abs=1e-15)


def test_seasonal_mean_drops_incomplete_year(caplog):
    full = {m: 0.1 for m in range(1, 13)}
    partial = {m: 0.2 for m in range(1, 13) if m != 7}
    with caplog.at_level(logging.WARNING):
        cov = seasonal_mean_covariate(_monthly({1990: full, 1991: partial}))
    assert cov.years.tolist() == [1990]
    assert any("1991" in w for w in cov.warnings)
    assert "1991" in caplog.text


def test_seasonal_mean_errors():
    only_jan = _monthly({1990: {1: 0.1}})
    with pytest.raises(ValidationError, match="no year"):
        seasonal_mean_covariate(only_jan)
    with pytest.raises(ValidationError, match="cross-year"):
        seasonal_mean_covariate(_monthly({1990: {m: 0.1 for m in range(1, 13)}}), 11, 2)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-3, 3, allow_nan=False), min_size=36, max_size=36),
    st.randoms(use_true_random=False),
)
def test_seasonal_mean_invariant_to_row_order(values, random):
    entries = [(1990 + i // 12, i % 12 + 1, v) for i, v in enumerate(values)]
    shuffled = list(entries)
    random.shuffle(shuffled)
    a = seasonal_mean_covariate(MonthlyIndexSeries(tuple(entries)))
    b = seasonal_mean_covariate(MonthlyIndexSeries(tuple(shuffled)))
    assert a == b


def _series(first, last, value=3.0):
    years = np.arange(first, last + 1)
    return AnnualMaximaSeries(years, np.full(years.size, value) + 0.01 * np.arange(years.size))


def test_align_restricts_covariate():
    series = _series(1973, 2014)
    cov = CovariateSeries(np.arange(1950, 2021), np.linspace(-1, 1, 71))
    ds = align(series, cov)
    assert ds.covariate.years.tolist() == list(range(1973, 2015))
    assert ds.phi[0] == cov.values[23]


def test_align_names_missing_year():
    series = _series(1973, 2014)
    years = np.array([y for y in range(1950, 2021) if y != 1980])
    with pytest.raises(AlignmentError, match="1980"):
        align(series, CovariateSeries(years, np.zeros(years.size)))


def test_align_identity_and_idempotence():
    series = _series(1990, 2005)
    cov = CovariateSeries(series.years, np.arange(16) / 10)
    ds = align(series, cov)
    assert ds.covariate == cov
    again = align(ds.series, ds.covariate)
    assert again == ds


def test_station_meta_invariants():
    kw = dict(station_id="445", name="Upper Gauge", river_basin="Test Basin", latitude=28.04,
              longitude=84.81, basin_area=3960, record_start_year=1969, record_end_year=2015)
    StationMeta(**kw)
    for bad in ({"basin_area": 0}, {"latitude": 91}, {"longitude": -181}, {"record_start_year": 2016}):
        with pytest.raises(ValidationError):
            StationMeta(**{**kw, **bad})


def test_dataset_json_round_trip(tmp_path, synthetic_dataset):
    path = tmp_path / "ds.json"
    save_dataset(synthetic_dataset, path)
    doc = json.loads(path.read_text())
    assert set(doc) == {"meta", "years", "stage_m", "covariate"}
    back = load_dataset(path)
    assert back == synthetic_dataset
    assert np.array_equal(back.phi, synthetic_dataset.phi)
    assert back.series.meta == synthetic_dataset.series.meta


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3, allow_nan=False, allow_infinity=False), min_size=10, max_size=40))
def test_stage_csv_round_trip_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "s.csv"
    series = AnnualMaximaSeries(np.arange(1900, 1900 + len(values)), np.array(values))
    write_annual_maxima(series, path)
    back = load_annual_maxima(path)
    assert np.array_equal(back.values, series.values)
    assert np.array_equal(back.years, series.years)
