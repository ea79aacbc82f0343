"""Generalized extreme value distribution with covariate-dependent location.

Sign convention: ``xi > 0`` is the heavy-tailed (Frechet) case with a lower
support bound ``mu - sigma/xi``; ``xi < 0`` is bounded above at the same
point. This is the climatological convention, opposite in sign to
``scipy.stats.genextreme``'s ``c``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AlignmentError, DomainError, ParameterError

XI_TOL = 1e-8


class ModelStructure(str, Enum):
    STATIONARY = "stationary"
    NONSTATIONARY = "nonstationary"

    @classmethod
    def parse(cls, value) -> "ModelStructure":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ParameterError(f"unknown model structure {value!r}") from None

    @property
    def n_params(self) -> int:
        return 3 if self is ModelStructure.STATIONARY else 4


@dataclass(frozen=True)
class GevParams:
    """GEV parameters with location ``mu0 + mu1 * phi``."""

    mu0: float
    mu1: float
    sigma: float
    xi: float

    def __post_init__(self):
        vals = (self.mu0, self.mu1, self.sigma, self.xi)
        if not all(np.isfinite(vals)):
            raise ParameterError(f"parameters must be finite, got {vals}")
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        for name in ("mu0", "mu1", "sigma", "xi"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def stationary(cls, mu: float, sigma: float, xi: float) -> "GevParams":
        return cls(mu, 0.0, sigma, xi)

    def as_array(self) -> np.ndarray:
        return np.array([self.mu0, self.mu1, self.sigma, self.xi])

    @classmethod
    def from_array(cls, theta) -> "GevParams":
        mu0, mu1, sigma, xi = (float(v) for v in theta)
        return cls(mu0, mu1, sigma, xi)

    def is_stationary(self) -> bool:
        return self.mu1 == 0.0

    def conforms_to(self, structure: ModelStructure) -> bool:
        return ModelStructure.parse(structure) is ModelStructure.NONSTATIONARY or self.mu1 == 0.0


def location_at(params: GevParams, covariate_value, structure: ModelStructure | None = None):
    """Location ``mu0 + mu1 * phi``; the stationary structure ignores ``phi``."""
    if structure is not None and ModelStructure.parse(structure) is ModelStructure.STATIONARY:
        if np.ndim(covariate_value):
            return np.full(np.shape(covariate_value), params.mu0)
        return params.mu0
    return params.mu0 + params.mu1 * covariate_value


def _check_sigma(sigma):
    if np.any(~(np.asarray(sigma) > 0)):
        raise ParameterError(f"sigma must be positive, got {sigma}")


def gev_logpdf(x, mu, sigma, xi):
    """Log density; ``-inf`` outside the support."""
    _check_sigma(sigma)
    x, mu, sigma, xi = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, mu, sigma, xi)))
    s = (x - mu) / sigma
    out = np.full(s.shape, -np.inf)
    gum = np.abs(xi) < XI_TOL
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if np.any(gum):
            sg = s[gum]
            out[gum] = -np.log(sigma[gum]) - sg - np.exp(-sg)
        gen = ~gum
        if np.any(gen):
            xg = xi[gen]
            arg = xg * s[gen]
            ok = arg > -1.0
            lt = np.log1p(arg[ok])
            vals = np.full(arg.shape, -np.inf)
            xo = xg[ok]
            vals[ok] = -np.log(sigma[gen][ok]) - (1.0 + 1.0 / xo) * lt - np.exp(-lt / xo)
            out[gen] = vals
    # exp overflow deep in the left tail gives -inf, which is the right limit
    out[np.isnan(out)] = -np.inf
    return float(out) if out.ndim == 0 else out


def gev_pdf(x, mu, sigma, xi):
    return np.exp(gev_logpdf(x, mu, sigma, xi))


def gev_cdf(x, mu, sigma, xi):
    """Distribution function, clamped to 0/1 outside a bounded support."""
    _check_sigma(sigma)
    x, mu, sigma, xi = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, mu, sigma, xi)))
    s = (x - mu) / sigma
    out = np.empty(s.shape)
    gum = np.abs(xi) < XI_TOL
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out[gum] = np.exp(-np.exp(-s[gum]))
        gen = ~gum
        if np.any(gen):
            xg = xi[gen]
            arg = xg * s[gen]
            vals = np.empty(arg.shape)
            ok = arg > -1.0
            vals[ok] = np.exp(-np.exp(-np.log1p(arg[ok]) / xg[ok]))
            # outside the support: below a lower bound (xi > 0) or above an upper bound (xi < 0)
            vals[~ok] = np.where(xg[~ok] > 0, 0.0, 1.0)
            out[gen] = vals
    out[np.isposinf(s)] = 1.0
    out[np.isneginf(s)] = 0.0
    return float(out) if out.ndim == 0 else out


def gev_sf(x, mu, sigma, xi):
    """Exceedance probability ``1 - cdf``, computed without cancellation."""
    _check_sigma(sigma)
    x, mu, sigma, xi = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, mu, sigma, xi)))
    s = (x - mu) / sigma
    out = np.empty(s.shape)
    gum = np.abs(xi) < XI_TOL
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out[gum] = -np.expm1(-np.exp(-s[gum]))
        gen = ~gum
        if np.any(gen):
            xg = xi[gen]
            arg = xg * s[gen]
            vals = np.empty(arg.shape)
            ok = arg > -1.0
            vals[ok] = -np.expm1(-np.exp(-np.log1p(arg[ok]) / xg[ok]))
            vals[~ok] = np.where(xg[~ok] > 0, 1.0, 0.0)
            out[gen] = vals
    out[np.isposinf(s)] = 0.0
    out[np.isneginf(s)] = 1.0
    return float(out) if out.ndim == 0 else out


def gev_quantile(p, mu, sigma, xi):
    """Inverse distribution function for ``0 < p < 1``."""
    _check_sigma(sigma)
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0) & (p_arr < 1))):
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    p_arr, mu, sigma, xi = np.broadcast_arrays(p_arr, *(np.asarray(a, dtype=float) for a in (mu, sigma, xi)))
    y = -np.log(-np.log(p_arr))  # reduced Gumbel variate
    gum = np.abs(xi) < XI_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        safe_xi = np.where(gum, 1.0, xi)
        # (exp(xi*y) - 1)/xi, written with expm1 for accuracy at small xi
        z = np.where(gum, y, np.expm1(safe_xi * y) / safe_xi)
    out = mu + sigma * z
    return float(out) if out.ndim == 0 else out


def support_bounds(mu, sigma, xi) -> tuple[float, float]:
    """(lower, upper) support endpoints for scalar parameters."""
    if abs(xi) < XI_TOL:
        return -np.inf, np.inf
    bound = mu - sigma / xi
    return (bound, np.inf) if xi > 0 else (-np.inf, bound)


def _dataset_arrays(dataset, structure: ModelStructure):
    x = np.asarray(dataset.stage, dtype=float)
    if structure is ModelStructure.STATIONARY:
        return x, None
    phi = getattr(dataset, "phi", None)
    if phi is None:
        raise AlignmentError("nonstationary structure requires an aligned covariate")
    phi = np.asarray(phi, dtype=float)
    if phi.shape != x.shape:
        raise AlignmentError("covariate and stage lengths differ")
    return x, phi


def log_likelihood(dataset, structure, params: GevParams) -> float:
    """Sum of log densities of the observations; ``-inf`` if any lies outside the support."""
    structure = ModelStructure.parse(structure)
    x, phi = _dataset_arrays(dataset, structure)
    mu = params.mu0 if phi is None else params.mu0 + params.mu1 * phi
    ll = gev_logpdf(x, mu, params.sigma, params.xi)
    total = float(np.sum(ll))
    return total if np.isfinite(total) else -np.inf


def make_loglik(dataset, structure):
    """Fast scalar log-likelihood closure over a raw ``(mu0, mu1, sigma, xi)`` vector.

    Used inside the sampler and optimiser, where the ``gev_logpdf`` broadcasting
    machinery would dominate the cost. Returns ``-inf`` for ``sigma <= 0``.
    """
    structure = ModelStructure.parse(structure)
    x, phi = _dataset_arrays(dataset, structure)
    n = x.size
    x = x.copy()
    phi = None if phi is None else phi.copy()
    log, log1p, exp, npsum = np.log, np.log1p, np.exp, np.sum

    def loglik(theta) -> float:
        mu0, mu1, sigma, xi = theta
        if not sigma > 0:
            return -np.inf
        if phi is None:
            s = (x - mu0) / sigma
        else:
            s = (x - (mu0 + mu1 * phi)) / sigma
        if abs(xi) < XI_TOL:
            return float(-n * log(sigma) - npsum(s) - npsum(exp(-s)))
        arg = xi * s
        if arg.min() <= -1.0:
            return -np.inf
        lt = log1p(arg)
        with np.errstate(over="ignore"):
            val = -n * log(sigma) - (1.0 + 1.0 / xi) * npsum(lt) - npsum(exp(-lt / xi))
        return float(val) if np.isfinite(val) else -np.inf

    return loglik


def gev_sample(n: int, params: GevParams, rng: np.random.Generator, covariate=None) -> np.ndarray:
    """Draw ``n`` values by inversion (``covariate`` gives per-draw ``phi``)."""
    u = rng.random(n)
    u = np.clip(u, np.finfo(float).tiny, 1 - np.finfo(float).eps)
    mu = params.mu0 if covariate is None else params.mu0 + params.mu1 * np.asarray(covariate, dtype=float)
    return gev_quantile(u, mu, params.sigma, params.xi)
