"""Return levels from parameter ensembles.

A return level for period ``T`` is the GEV quantile at ``1 - 1/T`` with the
location evaluated at a reference covariate value (see ``CovariateRef``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .bayes import ParameterEnsemble, map_estimate
from .errors import DomainError, ValidationError
from .gev import GevParams, ModelStructure, gev_quantile, gev_sf, location_at

CURVE_COLUMNS = ("period", "expected", "median", "mode", "lo", "hi", "map_level")
DEFAULT_PERIODS = (2, 5, 10, 25, 50, 100)


@dataclass(frozen=True)
class CovariateRef:
    """Which covariate value anchors nonstationary return levels."""

    mode: str = "last_year"
    value: float | None = None

    def __post_init__(self):
        if self.mode not in ("last_year", "fixed_value", "empirical_mean"):
            raise ValidationError(f"unknown covariate reference mode {self.mode!r}")
        if self.mode == "fixed_value" and (self.value is None or not math.isfinite(self.value)):
            raise ValidationError("fixed_value covariate reference needs a finite value")

    @classmethod
    def parse(cls, text: str) -> "CovariateRef":
        """``last_year``, ``empirical_mean`` or a number (fixed value)."""
        if isinstance(text, CovariateRef):
            return text
        text = str(text).strip()
        if text in ("last_year", "empirical_mean"):
            return cls(text)
        if text.startswith("fixed_value:"):
            text = text.split(":", 1)[1]
        try:
            return cls("fixed_value", float(text))
        except ValueError:
            raise ValidationError(f"cannot parse covariate reference {text!r}") from None

    def resolve(self, dataset) -> float:
        if self.mode == "fixed_value":
            return float(self.value)
        phi = getattr(dataset, "phi", None) if dataset is not None else None
        if phi is None or len(phi) == 0:
            raise ValidationError(f"covariate reference {self.mode!r} needs a dataset with a covariate")
        if self.mode == "last_year":
            return float(phi[-1])
        return float(np.mean(phi))

    def describe(self) -> str:
        return f"fixed_value:{self.value!r}" if self.mode == "fixed_value" else self.mode


@dataclass(frozen=True, eq=False)
class ReturnLevelDistribution:
    return_period: float
    levels: np.ndarray
    expected: float
    median: float
    mode_estimate: float
    credible_interval: tuple[float, float]
    map_level: float
    mass: float = 0.9

    def row(self) -> dict:
        lo, hi = self.credible_interval
        return {
            "period": self.return_period,
            "expected": self.expected,
            "median": self.median,
            "mode": self.mode_estimate,
            "lo": lo,
            "hi": hi,
            "map_level": self.map_level,
        }


@dataclass(frozen=True)
class ReturnCurve:
    periods: tuple
    summaries: tuple

    def rows(self) -> list[dict]:
        return [s.row() for s in self.summaries]

    @property
    def expected(self) -> np.ndarray:
        return np.array([s.expected for s in self.summaries])


def _check_period(T) -> None:
    if np.any(~(np.asarray(T, dtype=float) > 1)):
        raise DomainError(f"return period must exceed 1 year, got {T}")


def return_level(params: GevParams, T: float, structure=ModelStructure.NONSTATIONARY, covariate_ref_value: float = 0.0) -> float:
    _check_period(T)
    mu = location_at(params, covariate_ref_value, ModelStructure.parse(structure))
    return gev_quantile(1.0 - 1.0 / T, mu, params.sigma, params.xi)


def _ensemble_levels(ensemble: ParameterEnsemble, T: float, phi: float) -> np.ndarray:
    th = ensemble.theta
    if ensemble.structure is ModelStructure.STATIONARY:
        mu = th[:, 0]
    else:
        mu = th[:, 0] + th[:, 1] * phi
    return np.asarray(gev_quantile(1.0 - 1.0 / T, mu, th[:, 2], th[:, 3]), dtype=float).reshape(-1)


def credible_interval(levels, mass: float = 0.9) -> tuple[float, float]:
    """Equal-tailed interval from order statistics.

    The lower end is the order statistic with ``floor(n*(1-mass)/2)`` values
    below it; the interval then spans ``ceil(n*mass)`` order statistics, so the
    empirical coverage is within ``1/n`` of ``mass``.
    """
    if not 0 < mass < 1:
        raise DomainError(f"credible mass must lie in (0, 1), got {mass}")
    y = np.sort(np.asarray(levels, dtype=float))
    n = y.size
    if n == 0:
        raise ValidationError("no levels")
    i = int(math.floor(n * (1.0 - mass) / 2.0))
    count = max(1, int(math.ceil(n * mass - 1e-9)))
    j = min(n - 1, i + count - 1)
    return float(y[i]), float(y[j])


def histogram_mode(levels) -> float:
    """Centre of the densest Freedman-Diaconis histogram bin."""
    y = np.asarray(levels, dtype=float)
    lo, hi = float(y.min()), float(y.max())
    if hi == lo:
        return lo
    q75, q25 = np.percentile(y, [75, 25])
    width = 2.0 * (q75 - q25) / y.size ** (1 / 3)
    if not width > 0:
        return float(np.median(y))
    nbins = int(min(max(math.ceil((hi - lo) / width), 1), 10_000))
    counts, edges = np.histogram(y, bins=nbins, range=(lo, hi))
    k = int(np.argmax(counts))
    return float(0.5 * (edges[k] + edges[k + 1]))


def summarize_levels(levels, T: float, map_level: float, mass: float = 0.9) -> ReturnLevelDistribution:
    levels = np.asarray(levels, dtype=float)
    levels.setflags(write=False)
    return ReturnLevelDistribution(
        return_period=float(T),
        levels=levels,
        expected=float(np.mean(levels)),
        median=float(np.median(levels)),
        mode_estimate=histogram_mode(levels),
        credible_interval=credible_interval(levels, mass),
        map_level=float(map_level),
        mass=mass,
    )


def return_level_ensemble(
    ensemble: ParameterEnsemble,
    T: float,
    covariate_ref: CovariateRef | None = None,
    dataset=None,
    mass: float = 0.9,
) -> ReturnLevelDistribution:
    """Return-level distribution over every retained sample."""
    _check_period(T)
    if len(ensemble) == 0:
        raise ValidationError("empty ensemble")
    covariate_ref = covariate_ref or CovariateRef()
    if ensemble.structure is ModelStructure.STATIONARY and dataset is None:
        phi = 0.0
    else:
        phi = covariate_ref.resolve(dataset)
    levels = _ensemble_levels(ensemble, T, phi)
    map_lvl = return_level(map_estimate(ensemble), T, ensemble.structure, phi)
    return summarize_levels(levels, T, map_lvl, mass)


def return_curve(
    ensemble: ParameterEnsemble,
    periods: Sequence[float] = DEFAULT_PERIODS,
    covariate_ref: CovariateRef | None = None,
    dataset=None,
    mass: float = 0.9,
) -> ReturnCurve:
    periods = tuple(float(p) for p in periods)
    if not periods:
        raise ValidationError("no return periods requested")
    _check_period(periods)
    if any(b <= a for a, b in zip(periods, periods[1:])):
        raise ValidationError("return periods must be strictly increasing")
    summaries = tuple(return_level_ensemble(ensemble, T, covariate_ref, dataset, mass) for T in periods)
    return ReturnCurve(periods, summaries)


def equivalent_return_period(
    stationary_level: float,
    ns_ensemble: ParameterEnsemble,
    covariate_ref: CovariateRef | None = None,
    dataset=None,
) -> float:
    """Recurrence interval of a fixed level under the nonstationary ensemble.

    Computed as ``1 / mean_k P_k(X > level)`` with each sample's location taken
    at the reference covariate. Returns ``inf`` when no sample can reach the
    level.
    """
    if not math.isfinite(stationary_level):
        raise DomainError("stationary level must be finite")
    if len(ns_ensemble) == 0:
        raise ValidationError("empty ensemble")
    covariate_ref = covariate_ref or CovariateRef()
    th = ns_ensemble.theta
    if ns_ensemble.structure is ModelStructure.STATIONARY:
        mu = th[:, 0]
    else:
        mu = th[:, 0] + th[:, 1] * covariate_ref.resolve(dataset)
    p_bar = float(np.mean(gev_sf(stationary_level, mu, th[:, 2], th[:, 3])))
    return math.inf if p_bar <= 0 else 1.0 / p_bar


def survival_function(levels) -> list[tuple[float, float]]:
    """Empirical exceedance ``S(x) = #{levels > x} / n`` at each distinct level."""
    y = np.sort(np.asarray(levels, dtype=float))
    if y.size == 0:
        raise ValidationError("survival function of an empty sample")
    u = np.unique(y)
    above = y.size - np.searchsorted(y, u, side="right")
    return [(float(a), float(b)) for a, b in zip(u, above / y.size)]


def survival_at(levels, x) -> np.ndarray | float:
    y = np.sort(np.asarray(levels, dtype=float))
    out = (y.size - np.searchsorted(y, x, side="right")) / y.size
    return float(out) if np.ndim(out) == 0 else out


def write_curve_csv(curve: ReturnCurve, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CURVE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in curve.rows():
            w.writerow({k: repr(float(v)) for k, v in row.items()})


def write_survival_csv(points, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("level", "survival"))
        for level, s in points:
            w.writerow((repr(float(level)), repr(float(s))))


def summary_dict(dist: ReturnLevelDistribution) -> dict:
    d = dist.row()
    d["mass"] = dist.mass
    d["n"] = int(dist.levels.size)
    return d
