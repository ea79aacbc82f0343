"""Loading, validation and alignment of stage records and covariate indices.

Two canonical long-format CSV layouts are read:

* stage records, header ``year,stage_m``, one row per year;
* monthly index values, header ``year,month,value``.

An aligned dataset (stage series plus the covariate restricted to the same
years) is serialised as a single JSON document with keys ``meta``, ``years``,
``stage_m`` and ``covariate``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import AlignmentError, FormatError, InsufficientDataError, ValidationError

logger = logging.getLogger(__name__)

MIN_SERIES_LENGTH = 10
STAGE_HEADER = ("year", "stage_m")
INDEX_HEADER = ("year", "month", "value")


@dataclass(frozen=True)
class StationMeta:
    station_id: str
    name: str
    river_basin: str
    latitude: float
    longitude: float
    basin_area: float
    record_start_year: int
    record_end_year: int

    def __post_init__(self):
        if self.record_start_year > self.record_end_year:
            raise ValidationError(
                f"record_start_year {self.record_start_year} after record_end_year {self.record_end_year}"
            )
        if not self.basin_area > 0:
            raise ValidationError(f"basin_area must be positive, got {self.basin_area}")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValidationError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValidationError(f"longitude {self.longitude} outside [-180, 180]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "StationMeta":
        try:
            return cls(
                station_id=str(d["station_id"]),
                name=str(d["name"]),
                river_basin=str(d["river_basin"]),
                latitude=float(d["latitude"]),
                longitude=float(d["longitude"]),
                basin_area=float(d["basin_area"]),
                record_start_year=int(d["record_start_year"]),
                record_end_year=int(d["record_end_year"]),
            )
        except KeyError as exc:
            raise ValidationError(f"station metadata missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class AnnualMaximaSeries:
    """Annual maximum stage (m) for consecutive years at one station."""

    years: np.ndarray
    values: np.ndarray
    meta: StationMeta | None = None
    min_length: int = MIN_SERIES_LENGTH

    def __post_init__(self):
        years = np.asarray(self.years)
        values = np.asarray(self.values, dtype=float)
        if years.ndim != 1 or values.ndim != 1 or len(years) != len(values):
            raise ValidationError("years and values must be 1-d sequences of equal length")
        if len(years) < self.min_length:
            raise InsufficientDataError(
                f"series has {len(years)} years, below minimum length {self.min_length}"
            )
        if not np.issubdtype(years.dtype, np.integer):
            if not np.all(np.equal(np.mod(years, 1), 0)):
                raise ValidationError("years must be integers")
        years = years.astype(np.int64)
        gaps = np.flatnonzero(np.diff(years) != 1)
        if gaps.size:
            i = gaps[0]
            if years[i + 1] <= years[i]:
                raise ValidationError(f"years not strictly increasing at {years[i + 1]}")
            raise ValidationError(f"missing year {years[i] + 1}")
        bad = np.flatnonzero(~np.isfinite(values) | (values <= 0))
        if bad.size:
            i = bad[0]
            raise ValidationError(f"stage for year {years[i]} must be finite and > 0, got {values[i]}")
        years.setflags(write=False)
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.years)


@dataclass(frozen=True)
class MonthlyIndexSeries:
    """Monthly index entries keyed by (year, month)."""

    entries: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        seen = set()
        clean = []
        for year, month, value in self.entries:
            year, month, value = int(year), int(month), float(value)
            if not 1 <= month <= 12:
                raise ValidationError(f"month {month} outside 1-12 (year {year})")
            if not math.isfinite(value):
                raise ValidationError(f"non-finite index value at {year}-{month:02d}")
            if (year, month) in seen:
                raise ValidationError(f"duplicate entry for {year}-{month:02d}")
            seen.add((year, month))
            clean.append((year, month, value))
        object.__setattr__(self, "entries", tuple(sorted(clean)))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class CovariateSeries:
    years: np.ndarray
    values: np.ndarray
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        years = np.asarray(self.years, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        if years.ndim != 1 or len(years) != len(values):
            raise ValidationError("covariate years and values must have equal length")
        if len(years) > 1 and np.any(np.diff(years) <= 0):
            raise ValidationError("covariate years must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValidationError("covariate values must be finite")
        years.setflags(write=False)
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "values", values)

    def __eq__(self, other):
        if not isinstance(other, CovariateSeries):
            return NotImplemented
        return np.array_equal(self.years, other.years) and np.array_equal(self.values, other.values)

    def __len__(self) -> int:
        return len(self.years)


@dataclass(frozen=True)
class AlignedDataset:
    series: AnnualMaximaSeries
    covariate: CovariateSeries
    extra_meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not np.array_equal(self.series.years, self.covariate.years):
            raise AlignmentError("covariate years do not match stage years element-wise")

    @property
    def years(self) -> np.ndarray:
        return self.series.years

    @property
    def stage(self) -> np.ndarray:
        return self.series.values

    @property
    def phi(self) -> np.ndarray:
        return self.covariate.values

    def __len__(self) -> int:
        return len(self.series)

    def __eq__(self, other):
        if not isinstance(other, AlignedDataset):
            return NotImplemented
        return (
            np.array_equal(self.series.years, other.series.years)
            and np.array_equal(self.series.values, other.series.values)
            and self.series.meta == other.series.meta
            and self.covariate == other.covariate
        )

    def to_dict(self) -> dict:
        meta = {"station": self.series.meta.to_dict() if self.series.meta else None}
        meta.update(self.extra_meta)
        return {
            "meta": meta,
            "years": [int(y) for y in self.years],
            "stage_m": [float(v) for v in self.stage],
            "covariate": [float(v) for v in self.phi],
        }

    @classmethod
    def from_dict(cls, d: dict, min_length: int = MIN_SERIES_LENGTH) -> "AlignedDataset":
        for key in ("meta", "years", "stage_m", "covariate"):
            if key not in d:
                raise FormatError(f"dataset document missing key {key!r}")
        meta = dict(d["meta"] or {})
        station = meta.pop("station", None)
        series = AnnualMaximaSeries(
            np.asarray(d["years"], dtype=np.int64),
            np.asarray(d["stage_m"], dtype=float),
            meta=StationMeta.from_dict(station) if station else None,
            min_length=min_length,
        )
        if len(d["covariate"]) != len(series):
            raise AlignmentError("covariate length differs from stage length")
        cov = CovariateSeries(series.years, np.asarray(d["covariate"], dtype=float))
        return cls(series, cov, extra_meta=meta)


def _read_rows(path, header: Sequence[str]) -> list[tuple[int, list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise FormatError("file not found", path=path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        got_header = False
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            cells = [c.strip() for c in row]
            if not got_header:
                if tuple(c.lower() for c in cells) != tuple(header):
                    raise FormatError(
                        f"expected header {','.join(header)!r}, got {','.join(cells)!r}",
                        path=path, line=lineno,
                    )
                got_header = True
                continue
            if len(cells) != len(header):
                raise FormatError(
                    f"expected {len(header)} fields, got {len(cells)}", path=path, line=lineno
                )
            rows.append((lineno, cells))
    return rows


def _parse_int(text: str, path, lineno: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise FormatError(f"cannot parse {what} {text!r} as integer", path=path, line=lineno) from None


def _parse_float(text: str, path, lineno: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"cannot parse {what} {text!r} as number", path=path, line=lineno) from None


def load_annual_maxima(
    path,
    meta: StationMeta | None = None,
    min_length: int = MIN_SERIES_LENGTH,
) -> AnnualMaximaSeries:
    """Read a ``year,stage_m`` CSV into a validated series.

    Rows may appear in any order; they are sorted by year before the gap check.
    """
    rows = _read_rows(path, STAGE_HEADER)
    parsed = []
    seen = {}
    for lineno, (y, v) in rows:
        year = _parse_int(y, path, lineno, "year")
        value = _parse_float(v, path, lineno, "stage_m")
        if year in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate year {year} (first at line {seen[year]})")
        if not math.isfinite(value) or value <= 0:
            raise ValidationError(f"{path}:{lineno}: stage must be finite and > 0, got {v}")
        seen[year] = lineno
        parsed.append((year, value))
    parsed.sort()
    years = np.array([p[0] for p in parsed], dtype=np.int64)
    values = np.array([p[1] for p in parsed], dtype=float)
    return AnnualMaximaSeries(years, values, meta=meta, min_length=min_length)


def load_monthly_index(path) -> MonthlyIndexSeries:
    rows = _read_rows(path, INDEX_HEADER)
    entries = []
    seen = {}
    for lineno, (y, m, v) in rows:
        year = _parse_int(y, path, lineno, "year")
        month = _parse_int(m, path, lineno, "month")
        value = _parse_float(v, path, lineno, "value")
        if not 1 <= month <= 12:
            raise ValidationError(f"{path}:{lineno}: month {month} outside 1-12")
        if (year, month) in seen:
            raise ValidationError(
                f"{path}:{lineno}: duplicate entry for {year}-{month:02d} (first at line {seen[year, month]})"
            )
        seen[year, month] = lineno
        entries.append((year, month, value))
    return MonthlyIndexSeries(tuple(entries))


def load_station_meta(path) -> StationMeta:
    path = Path(path)
    if not path.is_file():
        raise FormatError("file not found", path=path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, path=path, line=exc.lineno) from None
    return StationMeta.from_dict(doc)


def seasonal_mean_covariate(
    monthly: MonthlyIndexSeries, start_month: int = 6, end_month: int = 11
) -> CovariateSeries:
    """Per-year mean of the index over the inclusive month window.

    Years lacking any month of the window are dropped; each drop is logged and
    recorded in ``CovariateSeries.warnings``.
    """
    if not (1 <= start_month <= 12 and 1 <= end_month <= 12):
        raise ValidationError(f"month window {start_month}:{end_month} outside 1-12")
    if start_month > end_month:
        raise ValidationError("cross-year month windows (start > end) are not supported")
    window = set(range(start_month, end_month + 1))
    by_year: dict[int, dict[int, float]] = {}
    for year, month, value in monthly.entries:
        if month in window:
            by_year.setdefault(year, {})[month] = value
    all_years = sorted({e[0] for e in monthly.entries})
    years, values, warnings = [], [], []
    for year in all_years:
        months = by_year.get(year, {})
        missing = sorted(window - months.keys())
        if missing:
            msg = f"year {year} dropped: missing month(s) {','.join(map(str, missing))}"
            logger.warning(msg)
            warnings.append(msg)
            continue
        # sum in month order so the result does not depend on file row order
        years.append(year)
        values.append(math.fsum(months[m] for m in sorted(window)) / len(window))
    if not years:
        raise ValidationError(f"no year has a complete {start_month}:{end_month} month window")
    return CovariateSeries(np.array(years), np.array(values), warnings=tuple(warnings))


def align(series: AnnualMaximaSeries, covariate: CovariateSeries, **extra_meta) -> AlignedDataset:
    """Restrict ``covariate`` to the stage years."""
    lookup = {int(y): i for i, y in enumerate(covariate.years)}
    idx = []
    for y in series.years:
        i = lookup.get(int(y))
        if i is None:
            raise AlignmentError(f"covariate has no value for stage year {int(y)}")
        idx.append(i)
    idx = np.array(idx, dtype=int)
    cov = CovariateSeries(covariate.years[idx], covariate.values[idx])
    return AlignedDataset(series, cov, extra_meta=dict(extra_meta))


def constant_covariate(series: AnnualMaximaSeries, value: float = 0.0) -> AlignedDataset:
    """Dataset with a flat covariate, for purely stationary work."""
    cov = CovariateSeries(series.years, np.full(len(series), float(value)))
    return AlignedDataset(series, cov)


def dataset_from_arrays(
    years: Iterable[int],
    stage: Iterable[float],
    covariate: Iterable[float] | None = None,
    meta: StationMeta | None = None,
    min_length: int = MIN_SERIES_LENGTH,
) -> AlignedDataset:
    years = np.asarray(list(years), dtype=np.int64)
    series = AnnualMaximaSeries(years, np.asarray(list(stage), dtype=float), meta=meta, min_length=min_length)
    if covariate is None:
        return constant_covariate(series)
    return AlignedDataset(series, CovariateSeries(series.years, np.asarray(list(covariate), dtype=float)))


def write_annual_maxima(series: AnnualMaximaSeries, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STAGE_HEADER)
        for y, v in zip(series.years, series.values):
            w.writerow([int(y), repr(float(v))])


def write_monthly_index(monthly: MonthlyIndexSeries, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INDEX_HEADER)
        for y, m, v in monthly.entries:
            w.writerow([y, m, repr(float(v))])


def save_dataset(dataset: AlignedDataset, path) -> None:
    Path(path).write_text(json.dumps(dataset.to_dict(), indent=1) + "\n", encoding="utf-8")


def load_dataset(path, min_length: int = MIN_SERIES_LENGTH) -> AlignedDataset:
    path = Path(path)
    if not path.is_file():
        raise FormatError("file not found", path=path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, path=path, line=exc.lineno) from None
    return AlignedDataset.from_dict(doc, min_length=min_length)
