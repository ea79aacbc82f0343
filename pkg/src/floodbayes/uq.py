"""Cumulative uncertainty decomposition of return-level estimates.

The scenario grid is a fully crossed array ``P[x_1, ..., x_Z]`` with one axis
per uncertainty source. For ``z`` leading sources, the conditional cumulative
uncertainty is the measure taken over the first ``z`` axes with the remaining
axes held fixed; the marginal cumulative uncertainty averages that over every
fixed combination of the trailing axes. Individual contributions are
successive differences of the marginal values, so they telescope to the total.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .bayes import ChainConfig, ParameterEnsemble, PriorSpec, mh_sample, resolve_prior
from .errors import DecompositionError, InitializationError, ValidationError
from .gev import ModelStructure
from .hazard import CovariateRef, _check_period, _ensemble_levels

logger = logging.getLogger(__name__)

DEFAULT_SOURCES = ("prior", "structure", "parameter")
MONOTONE_TOL = 1e-12


def range_measure(y) -> float:
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValidationError("range of an empty set")
    return float(y.max() - y.min())


def variance_measure(y) -> float:
    """Population variance ``(1/n) sum (y - mean)^2``."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValidationError("variance of an empty set")
    y = y - y.flat[0]  # shift keeps constant sets exactly zero
    return float(np.mean((y - y.mean()) ** 2))


def _axis_range(a: np.ndarray) -> np.ndarray:
    return a.max(axis=0) - a.min(axis=0)


def _axis_variance(a: np.ndarray) -> np.ndarray:
    a = a - a[:1]
    return np.mean((a - a.mean(axis=0)) ** 2, axis=0)


MEASURES: dict[str, tuple[Callable, Callable]] = {
    "range": (range_measure, _axis_range),
    "variance": (variance_measure, _axis_variance),
}


def _measure(name: str):
    try:
        return MEASURES[name]
    except KeyError:
        raise ValidationError(f"unknown measure {name!r}; use 'range' or 'variance'") from None


@dataclass(frozen=True, eq=False)
class ScenarioGrid:
    estimates: np.ndarray
    source_names: tuple[str, ...] = DEFAULT_SOURCES
    labels: tuple = field(default=())

    def __post_init__(self):
        est = np.array(self.estimates, dtype=float)
        names = tuple(self.source_names)
        if est.ndim < 1:
            raise ValidationError("scenario grid needs at least one source axis")
        if len(names) != est.ndim:
            raise ValidationError(f"{len(names)} source names for a {est.ndim}-d grid")
        if est.size == 0:
            raise ValidationError("scenario grid is empty")
        if not np.all(np.isfinite(est)):
            raise ValidationError("scenario grid contains non-finite estimates")
        est.setflags(write=False)
        object.__setattr__(self, "estimates", est)
        object.__setattr__(self, "source_names", names)

    @property
    def scenario_counts(self) -> tuple[int, ...]:
        return self.estimates.shape

    @property
    def n_sources(self) -> int:
        return self.estimates.ndim

    def reordered(self, order: Sequence[str]) -> "ScenarioGrid":
        """Same grid with source axes permuted to ``order``."""
        if sorted(order) != sorted(self.source_names):
            raise ValidationError(f"order {order} is not a permutation of {self.source_names}")
        axes = [self.source_names.index(n) for n in order]
        labels = tuple(self.labels[a] for a in axes) if self.labels else ()
        return ScenarioGrid(np.transpose(self.estimates, axes), tuple(order), labels)


@dataclass(frozen=True)
class UncertaintyDecomposition:
    measure: str
    source_names: tuple[str, ...]
    cumulative: tuple[float, ...]
    individual: tuple[float, ...]
    total: float

    def shares(self) -> tuple[float, ...]:
        if self.total == 0:
            return tuple(0.0 for _ in self.individual)
        return tuple(v / self.total for v in self.individual)

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "sources": list(self.source_names),
            "cumulative": list(self.cumulative),
            "individual": list(self.individual),
            "share": list(self.shares()),
            "total": self.total,
        }


def _check_z(grid: ScenarioGrid, z: int) -> None:
    if not 1 <= z <= grid.n_sources:
        raise ValidationError(f"source count z must be in 1..{grid.n_sources}, got {z}")


def conditional_cumulative(grid: ScenarioGrid, z: int, fixed_after: Sequence[int] = (), measure: str = "range") -> float:
    """Measure over the first ``z`` sources with the rest fixed at ``fixed_after``.

    ``z`` counts sources from the front of ``grid.source_names``;
    ``fixed_after`` holds one scenario index per remaining source.
    """
    _check_z(grid, z)
    fn, _ = _measure(measure)
    fixed_after = tuple(int(i) for i in fixed_after)
    rest = grid.scenario_counts[z:]
    if len(fixed_after) != len(rest):
        raise ValidationError(f"need {len(rest)} fixed scenario indices after source {z}, got {len(fixed_after)}")
    for k, (i, n) in enumerate(zip(fixed_after, rest)):
        if not 0 <= i < n:
            raise ValidationError(f"scenario index {i} out of range for source {grid.source_names[z + k]}")
    block = grid.estimates[(Ellipsis,) + fixed_after] if fixed_after else grid.estimates
    return fn(block.reshape(-1))


def marginal_cumulative(grid: ScenarioGrid, z: int, measure: str = "range") -> float:
    """Average of ``conditional_cumulative`` over all trailing-source combinations."""
    _check_z(grid, z)
    _, axis_fn = _measure(measure)
    lead = int(np.prod(grid.scenario_counts[:z]))
    flat = grid.estimates.reshape(lead, -1)
    return float(np.mean(axis_fn(flat)))


def decompose(grid: ScenarioGrid, measure: str = "range") -> UncertaintyDecomposition:
    """Cumulative values, individual contributions and total for one measure.

    Raises ``DecompositionError`` if the cumulative sequence decreases by more
    than rounding noise; small negative differences from rounding are kept
    as computed.
    """
    _measure(measure)
    cum = [marginal_cumulative(grid, z, measure) for z in range(1, grid.n_sources + 1)]
    scale = max(1.0, abs(cum[-1]))
    prev = 0.0
    individual = []
    for name, c in zip(grid.source_names, cum):
        diff = c - prev
        if diff < -MONOTONE_TOL * scale:
            raise DecompositionError(
                f"cumulative {measure} decreases at source {name!r}: {prev!r} -> {c!r}"
            )
        individual.append(diff)
        prev = c
    return UncertaintyDecomposition(measure, grid.source_names, tuple(cum), tuple(individual), cum[-1])


@dataclass(frozen=True)
class AnovaEffects:
    """Functional-ANOVA variances of a balanced grid.

    ``main[z]`` is the variance of source ``z``'s main effect; ``interactions``
    maps a sorted tuple of two or more source indices to the variance of
    that interaction term. ``pairwise`` is the two-source subset.
    """

    grand_mean: float
    main: tuple[float, ...]
    interactions: dict

    @property
    def pairwise(self) -> dict:
        return {k: v for k, v in self.interactions.items() if len(k) == 2}

    def individual_pairwise(self) -> tuple[float, ...]:
        """Main-effect variance plus pairwise interactions with later sources."""
        z_count = len(self.main)
        return tuple(
            self.main[z] + sum(self.interactions[(z, h)] for h in range(z + 1, z_count))
            for z in range(z_count)
        )

    def individual_full(self) -> tuple[float, ...]:
        """Every ANOVA term attributed to its earliest source."""
        out = list(self.main)
        for key, v in self.interactions.items():
            out[min(key)] += v
        return tuple(out)


def anova_effects(grid: ScenarioGrid, measure: str = "variance") -> AnovaEffects:
    """Main-effect and interaction variances of the grid (variance measure only)."""
    if measure != "variance":
        raise ValidationError("ANOVA effects are defined for the variance measure only")
    P = grid.estimates
    Z = P.ndim
    grand = float(P.mean())
    effects: dict[tuple, np.ndarray] = {(): np.array(grand)}
    main = []
    interactions = {}
    for order in range(1, Z + 1):
        for subset in itertools.combinations(range(Z), order):
            others = tuple(a for a in range(Z) if a not in subset)
            term = P.mean(axis=others) if others else P.copy()
            # subtract every lower-order term nested in this subset
            for sub_order in range(order):
                for sub in itertools.combinations(subset, sub_order):
                    eff = effects[sub]
                    shape = [P.shape[a] if a in sub else 1 for a in subset]
                    term = term - eff.reshape(shape)
            effects[subset] = term
            var = float(np.mean(term**2))
            if order == 1:
                main.append(var)
            else:
                interactions[subset] = var
    return AnovaEffects(grand, tuple(main), interactions)


def derive_seed(base_seed: int, stage: str, index: int = 0) -> int:
    """64-bit seed from SHA-256 of ``"<base_seed>:<stage>:<index>"``."""
    digest = hashlib.sha256(f"{int(base_seed)}:{stage}:{int(index)}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class Cell:
    index: int
    prior: PriorSpec
    structure: ModelStructure


def grid_cells(priors: Sequence, structures: Sequence) -> list[Cell]:
    priors = [resolve_prior(p) for p in priors]
    structures = [ModelStructure.parse(s) for s in structures]
    cells = []
    for i, (p, s) in enumerate(itertools.product(priors, structures)):
        cells.append(Cell(i, p, s))
    return cells


def _run_cell(args):
    dataset, cell, config = args
    try:
        return mh_sample(dataset, cell.structure, cell.prior, config)
    except InitializationError as exc:
        raise InitializationError(
            f"cell {cell.index} (prior={cell.prior.name}, structure={cell.structure.value}): {exc}"
        ) from None


def run_cells(dataset, priors, structures, chain_config: ChainConfig, workers: int = 1) -> list[ParameterEnsemble]:
    """One chain per (prior, structure) cell, prior-major order.

    Cell ``k`` uses seed ``derive_seed(chain_config.seed, "fit", k)``, so the
    results do not depend on ``workers``.
    """
    cells = grid_cells(priors, structures)
    jobs = [
        (dataset, c, replace(chain_config, seed=derive_seed(chain_config.seed, "fit", c.index)))
        for c in cells
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell, jobs))
    return [_run_cell(j) for j in jobs]


def grid_from_ensembles(
    ensembles: Sequence[ParameterEnsemble],
    n_priors: int,
    n_structures: int,
    T: float,
    covariate_ref: CovariateRef | None,
    dataset,
    parameter_scenarios: int = 1000,
    source_names: Sequence[str] = DEFAULT_SOURCES,
) -> ScenarioGrid:
    """Grid of ``T``-year levels, shape (priors, structures, parameter scenarios).

    Each chain is thinned to ``parameter_scenarios`` equally spaced samples;
    the k-th thinned sample of every cell shares parameter index ``k``.
    """
    _check_period(T)
    if len(ensembles) != n_priors * n_structures:
        raise ValidationError("ensemble count does not match priors x structures")
    phi = (covariate_ref or CovariateRef()).resolve(dataset)
    table = np.empty((n_priors, n_structures, parameter_scenarios))
    for k, ens in enumerate(ensembles):
        i, j = divmod(k, n_structures)
        table[i, j] = _ensemble_levels(ens.thinned(parameter_scenarios), T, phi)
    labels = (
        tuple(e.prior.name if e.prior else str(i) for i, e in enumerate(ensembles[::n_structures])),
        tuple(e.structure.value for e in ensembles[:n_structures]),
        tuple(range(parameter_scenarios)),
    )
    grid = ScenarioGrid(table, DEFAULT_SOURCES, labels)
    if tuple(source_names) != DEFAULT_SOURCES:
        grid = grid.reordered(source_names)
    return grid


def build_scenario_grid(
    dataset,
    priors: Sequence,
    structures: Sequence,
    T: float,
    covariate_ref: CovariateRef | None,
    chain_config: ChainConfig,
    parameter_scenarios: int = 1000,
    source_names: Sequence[str] = DEFAULT_SOURCES,
    workers: int = 1,
) -> ScenarioGrid:
    ensembles = run_cells(dataset, priors, structures, chain_config, workers)
    return grid_from_ensembles(
        ensembles, len(priors), len(structures), T, covariate_ref, dataset, parameter_scenarios, source_names
    )
