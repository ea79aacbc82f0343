"""Nonstationarity screening: Pettitt change point and Mann-Kendall trend.

The screening workflow considers a single change point. When it is
significant the record is split there and each side is tested for trend;
otherwise the whole record is tested.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import InsufficientDataError, ValidationError

logger = logging.getLogger(__name__)

MIN_TEST_LENGTH = 4


@dataclass(frozen=True)
class ChangePointResult:
    tau: int  # 1-based index of the last point of the first segment
    statistic_K: int
    p_value: float
    significant: bool
    n: int
    alpha: float


@dataclass(frozen=True)
class TrendResult:
    statistic_S: int
    variance_S: float
    z_score: float
    p_value: float
    significant: bool
    direction: str  # "increasing" | "decreasing" | "none"
    n: int
    alpha: float


@dataclass(frozen=True)
class NonstationarityAssessment:
    change_point: ChangePointResult
    trend_full: TrendResult | None = None
    trend_before: TrendResult | None = None
    trend_after: TrendResult | None = None
    recommended_structure: str = "stationary"
    warnings: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["warnings"] = list(self.warnings)
        return d


def _as_values(values: Sequence[float]) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValidationError("expected a 1-d sequence")
    if x.size < MIN_TEST_LENGTH:
        raise InsufficientDataError(f"need at least {MIN_TEST_LENGTH} values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("values must be finite")
    return x


def _sign_matrix(x: np.ndarray) -> np.ndarray:
    # D[i, j] = sgn(x_i - x_j)
    return np.sign(x[:, None] - x[None, :]).astype(np.int64)


def pettitt_test(values: Sequence[float], alpha: float = 0.05) -> ChangePointResult:
    """Pettitt (1979) rank test for a single change point.

    ``U_t = sum_{i<=t} sum_{j>t} sgn(x_i - x_j)`` for ``t = 1..n-1``; the
    statistic is ``K = max |U_t|`` and the approximate p-value
    ``2 exp(-6 K^2 / (n^3 + n^2))`` clipped to 1. Ties contribute zero and the
    earliest maximiser is reported.
    """
    x = _as_values(values)
    n = x.size
    # pairs inside the first segment cancel, so U_t is a running row sum
    u = np.cumsum(_sign_matrix(x).sum(axis=1))[:-1]
    absu = np.abs(u)
    k = int(absu.max())
    tau = int(np.argmax(absu)) + 1
    p = min(1.0, 2.0 * math.exp(-6.0 * k * k / (n**3 + n**2)))
    return ChangePointResult(tau=tau, statistic_K=k, p_value=p, significant=p < alpha, n=n, alpha=alpha)


def mann_kendall_test(values: Sequence[float], alpha: float = 0.05) -> TrendResult:
    """Mann-Kendall trend test, normal approximation with continuity correction."""
    x = _as_values(values)
    n = x.size
    s = int(np.triu(-_sign_matrix(x), k=1).sum())
    _, counts = np.unique(x, return_counts=True)
    ties = counts[counts > 1].astype(np.int64)
    var_s = (n * (n - 1) * (2 * n + 5) - int(np.sum(ties * (ties - 1) * (2 * ties + 5)))) / 18.0
    if var_s <= 0:
        return TrendResult(s, 0.0, 0.0, 1.0, False, "none", n, alpha)
    if s > 0:
        z = (s - 1) / math.sqrt(var_s)
    elif s < 0:
        z = (s + 1) / math.sqrt(var_s)
    else:
        z = 0.0
    p = min(1.0, max(0.0, math.erfc(abs(z) / math.sqrt(2.0))))
    significant = p < alpha
    if significant and s > 0:
        direction = "increasing"
    elif significant and s < 0:
        direction = "decreasing"
    else:
        direction = "none"
    return TrendResult(s, var_s, z, p, significant, direction, n, alpha)


def assess_nonstationarity(series, alpha: float = 0.05) -> NonstationarityAssessment:
    """Run the change-point / trend screening on an annual maxima record.

    ``series`` may be an ``AnnualMaximaSeries``, an ``AlignedDataset`` or a
    plain sequence of values.
    """
    if hasattr(series, "stage"):
        values = np.asarray(series.stage, dtype=float)
    elif hasattr(series, "values"):
        values = np.asarray(series.values, dtype=float)
    else:
        values = np.asarray(series, dtype=float)

    cp = pettitt_test(values, alpha)
    if not cp.significant:
        full = mann_kendall_test(values, alpha)
        return NonstationarityAssessment(
            change_point=cp,
            trend_full=full,
            recommended_structure="nonstationary" if full.significant else "stationary",
        )

    warnings = []
    sides = {}
    for name, part in (("before", values[: cp.tau]), ("after", values[cp.tau:])):
        if part.size < MIN_TEST_LENGTH:
            msg = f"subseries {name} change point has {part.size} values; trend test skipped"
            logger.warning(msg)
            warnings.append(msg)
            sides[name] = None
        else:
            sides[name] = mann_kendall_test(part, alpha)
    return NonstationarityAssessment(
        change_point=cp,
        trend_before=sides["before"],
        trend_after=sides["after"],
        recommended_structure="nonstationary",
        warnings=tuple(warnings),
    )
