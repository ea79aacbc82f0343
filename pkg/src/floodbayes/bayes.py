"""Priors, random-walk Metropolis-Hastings sampling, MAP and MLE fits."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import ConvergenceError, InitializationError, ParameterError, ValidationError
from .gev import GevParams, ModelStructure, make_loglik

logger = logging.getLogger(__name__)

PARAM_NAMES = ("mu0", "mu1", "sigma", "xi")
EULER_GAMMA = 0.5772156649015329

DEFAULT_UNIFORM_BOUNDS = {
    "mu0": (-100.0, 100.0),
    "mu1": (-100.0, 100.0),
    "sigma": (0.0, 100.0),
    "xi": (-5.0, 5.0),
}


@dataclass(frozen=True)
class PriorSpec:
    """Independent per-parameter priors.

    ``hyper`` maps each parameter name to ``(mean, variance)`` for the
    gaussian family or ``(lower, upper)`` for the uniform family. ``sigma``
    is always truncated to ``sigma > 0``.
    """

    family: str
    hyper: dict = field(hash=False)
    name: str = ""

    def __post_init__(self):
        if self.family not in ("gaussian", "uniform"):
            raise ValidationError(f"unknown prior family {self.family!r}")
        hyper = {}
        for p in PARAM_NAMES:
            if p not in self.hyper:
                raise ValidationError(f"prior missing hyperparameters for {p}")
            a, b = (float(v) for v in self.hyper[p])
            if self.family == "gaussian" and not b > 0:
                raise ValidationError(f"prior variance for {p} must be positive, got {b}")
            if self.family == "uniform" and not a < b:
                raise ValidationError(f"uniform bounds for {p} need lower < upper, got ({a}, {b})")
            hyper[p] = (a, b)
        object.__setattr__(self, "hyper", hyper)
        if not self.name:
            object.__setattr__(self, "name", self.family)

    @classmethod
    def gaussian(cls, mean: float = 0.0, variance: float = 100.0, name: str = "") -> "PriorSpec":
        return cls("gaussian", {p: (mean, variance) for p in PARAM_NAMES}, name or f"gaussian(0,{variance:g})")

    @classmethod
    def uniform(cls, bounds: dict | None = None, name: str = "uniform") -> "PriorSpec":
        b = dict(DEFAULT_UNIFORM_BOUNDS)
        b.update(bounds or {})
        return cls("uniform", b, name)

    def to_dict(self) -> dict:
        return {"family": self.family, "name": self.name, "hyper": {k: list(v) for k, v in self.hyper.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "PriorSpec":
        return cls(d["family"], {k: tuple(v) for k, v in d["hyper"].items()}, d.get("name", ""))


PRIOR_MENU = {
    "uniform": PriorSpec.uniform(),
    "gauss-wide": PriorSpec.gaussian(variance=100.0, name="gauss-wide"),
    "gauss-narrow": PriorSpec.gaussian(variance=1.0, name="gauss-narrow"),
}


def resolve_prior(name_or_spec) -> PriorSpec:
    if isinstance(name_or_spec, PriorSpec):
        return name_or_spec
    if isinstance(name_or_spec, dict):
        return PriorSpec.from_dict(name_or_spec)
    try:
        return PRIOR_MENU[name_or_spec]
    except KeyError:
        raise ValidationError(
            f"unknown prior {name_or_spec!r}; choose from {', '.join(PRIOR_MENU)}"
        ) from None


@dataclass(frozen=True)
class ChainConfig:
    seed: int
    iterations: int = 100_000
    burn_in: int = 10_000
    initial_step_sizes: tuple | None = None
    adapt_during_burnin: bool = True
    target_acceptance: float = 0.3

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ValidationError(f"seed must be an integer, got {self.seed!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must fit in 64 unsigned bits")
        if self.iterations <= 0:
            raise ValidationError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValidationError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.initial_step_sizes is not None:
            steps = tuple(float(s) for s in self.initial_step_sizes)
            if len(steps) != 4 or not all(s > 0 and math.isfinite(s) for s in steps):
                raise ValidationError("initial_step_sizes needs four positive values (mu0, mu1, sigma, xi)")
            object.__setattr__(self, "initial_step_sizes", steps)

    @property
    def n_retained(self) -> int:
        return self.iterations - self.burn_in

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "iterations": self.iterations,
            "burn_in": self.burn_in,
            "initial_step_sizes": list(self.initial_step_sizes) if self.initial_step_sizes else None,
            "adapt_during_burnin": self.adapt_during_burnin,
            "target_acceptance": self.target_acceptance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChainConfig":
        d = dict(d)
        steps = d.pop("initial_step_sizes", None)
        return cls(initial_step_sizes=tuple(steps) if steps else None, **d)


@dataclass(frozen=True, eq=False)
class ParameterEnsemble:
    """Post-burn-in samples; ``theta`` rows are ``(mu0, mu1, sigma, xi)``."""

    theta: np.ndarray
    log_posteriors: np.ndarray
    structure: ModelStructure
    prior: PriorSpec | None = None
    acceptance_rate: float = float("nan")
    config: ChainConfig | None = None
    warnings: tuple[str, ...] = ()
    step_sizes: tuple | None = None

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float, ndmin=2)
        lp = np.array(self.log_posteriors, dtype=float, ndmin=1)
        if theta.size == 0:
            theta = theta.reshape(0, 4)
        if theta.shape[1] != 4 or theta.shape[0] != lp.shape[0]:
            raise ValidationError("theta must be (n, 4) with one log-posterior per row")
        if theta.shape[0] and not np.all(theta[:, 2] > 0):
            raise ValidationError("every sample needs sigma > 0")
        theta.setflags(write=False)
        lp.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "log_posteriors", lp)
        object.__setattr__(self, "structure", ModelStructure.parse(self.structure))

    @classmethod
    def from_samples(cls, samples: Sequence[GevParams], log_posteriors: Sequence[float], structure, **kw):
        theta = np.array([s.as_array() for s in samples]).reshape(-1, 4)
        return cls(theta, np.asarray(log_posteriors, dtype=float), structure, **kw)

    def __len__(self) -> int:
        return self.theta.shape[0]

    def __iter__(self):
        return iter(self.samples)

    @property
    def samples(self) -> list[GevParams]:
        return [GevParams.from_array(row) for row in self.theta]

    @property
    def mu0(self) -> np.ndarray:
        return self.theta[:, 0]

    @property
    def mu1(self) -> np.ndarray:
        return self.theta[:, 1]

    @property
    def sigma(self) -> np.ndarray:
        return self.theta[:, 2]

    @property
    def xi(self) -> np.ndarray:
        return self.theta[:, 3]

    def subset(self, indices) -> "ParameterEnsemble":
        idx = np.asarray(indices, dtype=int)
        return replace(self, theta=self.theta[idx], log_posteriors=self.log_posteriors[idx])

    def thinned(self, count: int) -> "ParameterEnsemble":
        """Exactly ``count`` equally spaced samples (indices ``floor(k*n/count)``)."""
        n = len(self)
        if not 0 < count <= n:
            raise ValidationError(f"cannot thin {n} samples to {count}")
        return self.subset((np.arange(count) * n) // count)

    def to_dict(self, stride: int = 1) -> dict:
        if stride < 1:
            raise ValidationError("stride must be >= 1")
        sl = slice(None, None, stride)
        return {
            "structure": self.structure.value,
            "prior": self.prior.to_dict() if self.prior else None,
            "config": self.config.to_dict() if self.config else None,
            "acceptance_rate": float(self.acceptance_rate),
            "warnings": list(self.warnings),
            "step_sizes": list(self.step_sizes) if self.step_sizes else None,
            "stride": stride,
            "n_samples": len(self.theta[sl]),
            "samples": {
                **{name: self.theta[sl, i].tolist() for i, name in enumerate(PARAM_NAMES)},
                "log_posterior": self.log_posteriors[sl].tolist(),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterEnsemble":
        cols = d["samples"]
        theta = np.column_stack([np.asarray(cols[name], dtype=float) for name in PARAM_NAMES])
        return cls(
            theta,
            np.asarray(cols["log_posterior"], dtype=float),
            d["structure"],
            prior=PriorSpec.from_dict(d["prior"]) if d.get("prior") else None,
            acceptance_rate=float(d.get("acceptance_rate", float("nan"))),
            config=ChainConfig.from_dict(d["config"]) if d.get("config") else None,
            warnings=tuple(d.get("warnings", ())),
            step_sizes=tuple(d["step_sizes"]) if d.get("step_sizes") else None,
        )


def _coerce_theta(params) -> np.ndarray:
    if isinstance(params, GevParams):
        return params.as_array()
    theta = np.asarray(params, dtype=float)
    if theta.shape != (4,):
        raise ParameterError("parameter vector must be (mu0, mu1, sigma, xi)")
    return theta


def _active(structure: ModelStructure) -> tuple[int, ...]:
    return (0, 2, 3) if structure is ModelStructure.STATIONARY else (0, 1, 2, 3)


def make_log_prior(spec: PriorSpec, structure):
    """Scalar log-prior closure over a raw parameter vector."""
    structure = ModelStructure.parse(structure)
    active = _active(structure)
    hyper = [spec.hyper[PARAM_NAMES[i]] for i in active]

    if spec.family == "gaussian":
        const = sum(-0.5 * math.log(2 * math.pi * v) for _, v in hyper)
        terms = [(i, m, 0.5 / v) for i, (m, v) in zip(active, hyper)]

        def log_prior(theta) -> float:
            if not theta[2] > 0:
                return -math.inf
            acc = const
            for i, m, half_prec in terms:
                d = theta[i] - m
                acc -= half_prec * d * d
            return acc
    else:
        const = -sum(math.log(hi - lo) for lo, hi in hyper)
        boxes = [(i, lo, hi) for i, (lo, hi) in zip(active, hyper)]

        def log_prior(theta) -> float:
            if not theta[2] > 0:
                return -math.inf
            for i, lo, hi in boxes:
                if not lo <= theta[i] <= hi:
                    return -math.inf
            return const

    return log_prior


def log_prior(params, spec: PriorSpec, structure) -> float:
    """Sum of independent log densities over the active parameters.

    ``mu1`` is inactive under the stationary structure. Returns ``-inf`` for
    ``sigma <= 0`` or any value outside a uniform box. Accepts a
    ``GevParams`` or a raw ``(mu0, mu1, sigma, xi)`` vector, so that invalid
    points can be scored.
    """
    return make_log_prior(spec, structure)(_coerce_theta(params))


def make_log_posterior(dataset, structure, spec: PriorSpec):
    ll = make_loglik(dataset, structure)
    lpr = make_log_prior(spec, structure)

    def log_post(theta) -> float:
        p = lpr(theta)
        if p == -math.inf:
            return p
        return ll(theta) + p

    return log_post


def log_posterior(dataset, structure, params, spec: PriorSpec) -> float:
    return make_log_posterior(dataset, structure, spec)(_coerce_theta(params))


def moment_start(dataset, structure=ModelStructure.STATIONARY) -> np.ndarray:
    """Gumbel method-of-moments starting point with ``mu1 = xi = 0``."""
    x = np.asarray(dataset.stage, dtype=float)
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    sigma = sd * math.sqrt(6.0) / math.pi
    if not sigma > 0:
        sigma = max(abs(float(np.mean(x))) * 0.01, 1e-3)
    mu0 = float(np.mean(x)) - EULER_GAMMA * sigma
    return np.array([mu0, 0.0, sigma, 0.0])


def default_step_sizes(dataset, structure) -> np.ndarray:
    """Proposal scales of the order of the asymptotic posterior spread."""
    start = moment_start(dataset)
    n = len(np.asarray(dataset.stage))
    se = start[2] / math.sqrt(n)
    phi_sd = float(np.std(np.asarray(getattr(dataset, "phi", [0.0]), dtype=float)))
    mu1_step = se / phi_sd if phi_sd > 0 else se
    return np.array([se, mu1_step, 0.7 * se, 0.5 / math.sqrt(n)])


def mh_sample(dataset, structure, spec: PriorSpec, config: ChainConfig, max_init_tries: int = 200) -> ParameterEnsemble:
    """Gaussian random-walk Metropolis over the active parameters.

    Every iteration perturbs the full active vector. During burn-in a common
    log step scale is tuned by Robbins-Monro toward
    ``config.target_acceptance``; it is frozen afterwards. All random numbers
    come from ``numpy.random.default_rng(config.seed)``.
    """
    structure = ModelStructure.parse(structure)
    spec = resolve_prior(spec)
    active = np.array(_active(structure))
    d = active.size
    log_post = make_log_posterior(dataset, structure, spec)
    rng = np.random.default_rng(int(config.seed))

    steps = (
        np.array(config.initial_step_sizes, dtype=float)
        if config.initial_step_sizes is not None
        else default_step_sizes(dataset, structure)
    )
    theta = moment_start(dataset, structure)
    cur = log_post(theta)
    tries = 0
    while not math.isfinite(cur):
        if tries >= max_init_tries:
            raise InitializationError(
                f"no finite log-posterior start after {max_init_tries} tries ({structure.value}, {spec.name})"
            )
        tries += 1
        cand = moment_start(dataset, structure)
        cand[2] *= 1.0 + 0.1 * tries
        cand[active] += steps[active] * rng.standard_normal(d) * math.sqrt(tries)
        cand[2] = abs(cand[2])
        theta, cur = cand, log_post(cand)

    n_iter, burn = config.iterations, config.burn_in
    noise = rng.standard_normal((n_iter, d)) * steps[active]
    log_u = np.log(rng.random(n_iter))

    kept = np.empty((n_iter - burn, 4))
    kept_lp = np.empty(n_iter - burn)
    log_scale = 0.0
    scale = 1.0
    target = config.target_acceptance
    adapt = config.adapt_during_burnin
    accepted = 0
    prop = theta.copy()
    for t in range(n_iter):
        prop[:] = theta
        prop[active] += scale * noise[t]
        lp = log_post(prop)
        delta = lp - cur
        if log_u[t] < delta:
            theta, prop = prop, theta
            cur = lp
            ok = True
        else:
            ok = False
        if t < burn:
            if adapt:
                a = 1.0 if delta >= 0 else math.exp(delta)
                log_scale += (a - target) / (t + 1) ** 0.6
                scale = math.exp(log_scale)
        else:
            j = t - burn
            kept[j] = theta
            kept_lp[j] = cur
            accepted += ok

    n_kept = n_iter - burn
    rate = accepted / n_kept
    warnings = []
    if not 0.05 <= rate <= 0.8:
        msg = f"acceptance rate {rate:.3f} outside [0.05, 0.8] ({structure.value}, {spec.name})"
        logger.warning(msg)
        warnings.append(msg)
    final_steps = np.zeros(4)
    final_steps[active] = scale * steps[active]
    return ParameterEnsemble(
        kept, kept_lp, structure,
        prior=spec, acceptance_rate=rate, config=config,
        warnings=tuple(warnings), step_sizes=tuple(final_steps.tolist()),
    )


def map_estimate(ensemble: ParameterEnsemble) -> GevParams:
    """Retained sample with the largest log-posterior (earliest on ties)."""
    if len(ensemble) == 0:
        raise ValidationError("empty ensemble has no MAP estimate")
    return GevParams.from_array(ensemble.theta[int(np.argmax(ensemble.log_posteriors))])


def mle_fit(dataset, structure, maxiter: int = 20_000) -> GevParams:
    """Maximum likelihood by Nelder-Mead from the Gumbel moment start.

    The simplex works on ``log(sigma)``; the start point is one of its
    vertices, so the result never scores below it.
    """
    structure = ModelStructure.parse(structure)
    ll = make_loglik(dataset, structure)
    active = list(_active(structure))
    start = moment_start(dataset, structure)

    k_sigma = active.index(2)

    def unpack(z):
        theta = np.zeros(4)
        theta[active] = z
        theta[2] = math.exp(min(z[k_sigma], 700.0))
        return theta

    def objective(z):
        v = ll(unpack(z))
        return -v if math.isfinite(v) else math.inf

    z0 = start[active].copy()
    z0[k_sigma] = math.log(start[2])
    opts = {"maxiter": maxiter, "maxfev": 2 * maxiter, "xatol": 1e-9, "fatol": 1e-11, "adaptive": True}
    res = optimize.minimize(objective, z0, method="Nelder-Mead", options=opts)
    # a restart guards against a prematurely collapsed simplex
    if res.status == 0:
        res = optimize.minimize(objective, res.x, method="Nelder-Mead", options=opts)
    best = unpack(res.x)
    if res.status != 0 or not math.isfinite(res.fun):
        raise ConvergenceError(
            f"Nelder-Mead did not converge: {res.message}",
            best=GevParams.from_array(best) if math.isfinite(res.fun) else None,
            best_value=-res.fun,
        )
    if structure is ModelStructure.STATIONARY:
        best[1] = 0.0
    return GevParams.from_array(best)
