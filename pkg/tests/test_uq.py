import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from floodbayes.bayes import ChainConfig, PriorSpec, resolve_prior
from floodbayes.errors import DecompositionError, InitializationError, ValidationError
from floodbayes.gev import ModelStructure
from floodbayes.hazard import CovariateRef
from floodbayes.ingest import dataset_from_arrays
from floodbayes.uq import (
    ScenarioGrid,
    anova_effects,
    build_scenario_grid,
    conditional_cumulative,
    decompose,
    derive_seed,
    grid_cells,
    marginal_cumulative,
    range_measure,
    variance_measure,
)

from oracles import anova_brute_3, decompose_brute

# indexed [a, b]: P(a1, b1) = 0, P(a2, b1) = 2, P(a1, b2) = 1, P(a2, b2) = 5
SPEC_TABLE = np.array([[0.0, 1.0], [2.0, 5.0]])


def _grid(table, names=None):
    table = np.asarray(table, dtype=float)
    names = names or tuple(f"s{k}" for k in range(table.ndim))
    return ScenarioGrid(table, names)


def test_measure_examples():
    assert range_measure([1, 5, 3]) == 4
    assert range_measure([7.0]) == 0
    assert range_measure([-2, -7]) == 5
    assert variance_measure([2, 2, 2]) == 0
    assert variance_measure([0, 2]) == 1
    with pytest.raises(ValidationError):
        range_measure([])
    with pytest.raises(ValidationError):
        variance_measure([])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=30), st.floats(-100, 100))
def test_variance_shift_invariance(y, c):
    assert variance_measure(np.asarray(y) + c) == pytest.approx(variance_measure(y), abs=1e-6)


def test_two_source_example():
    g = _grid(SPEC_TABLE, ("A", "B"))
    assert conditional_cumulative(g, 1, (0,)) == 2
    assert conditional_cumulative(g, 1, (1,)) == 4
    assert conditional_cumulative(g, 2) == 5
    assert marginal_cumulative(g, 1) == 3
    assert marginal_cumulative(g, 2) == 5
    d = decompose(g, "range")
    assert d.cumulative == (3.0, 5.0)
    assert d.individual == (3.0, 2.0)
    assert d.total == 5.0
    assert d.shares() == pytest.approx((0.6, 0.4))


def test_conditional_argument_checks():
    g = _grid(SPEC_TABLE)
    with pytest.raises(ValidationError):
        conditional_cumulative(g, 1, ())
    with pytest.raises(ValidationError):
        conditional_cumulative(g, 1, (2,))
    with pytest.raises(ValidationError):
        marginal_cumulative(g, 3)
    with pytest.raises(ValidationError):
        decompose(g, "entropy")


def test_degenerate_grids():
    const = _grid(np.full((2, 3, 2), 4.2))
    for m in ("range", "variance"):
        d = decompose(const, m)
        assert d.individual == (0.0, 0.0, 0.0) and d.total == 0.0
        assert d.shares() == (0.0, 0.0, 0.0)
    single = _grid([1.0, 4.0, 2.0])
    assert marginal_cumulative(single, 1, "range") == 3.0
    # constant along the first source
    flat_a = np.tile(np.array([1.0, 3.0, 8.0]), (4, 1))
    assert decompose(_grid(flat_a), "range").individual[0] == 0.0


def test_grid_invariants():
    with pytest.raises(ValidationError):
        ScenarioGrid(np.array([[1.0, np.nan]]), ("a", "b"))
    with pytest.raises(ValidationError):
        ScenarioGrid(np.ones((2, 2)), ("a",))
    with pytest.raises(ValidationError):
        ScenarioGrid(np.ones((0, 2)), ("a", "b"))


grids = hnp.arrays(
    float,
    hnp.array_shapes(min_dims=1, max_dims=3, min_side=1, max_side=4).filter(lambda s: int(np.prod(s)) <= 36),
    elements=st.floats(-50, 50),
)


@settings(max_examples=300, deadline=None)
@given(grids, st.sampled_from(["range", "variance"]))
def test_decompose_matches_brute_force(table, measure):
    g = _grid(table)
    d = decompose(g, measure)
    as_dict = {idx: float(table[idx]) for idx in itertools.product(*[range(n) for n in table.shape])}
    cum, ind = decompose_brute(as_dict, table.shape, measure)
    assert d.cumulative == pytest.approx(cum, abs=1e-12, rel=1e-12)
    assert d.individual == pytest.approx(ind, abs=1e-12, rel=1e-12)
    assert sum(d.individual) == pytest.approx(d.total, abs=1e-9)
    assert all(v >= -1e-12 * max(1.0, abs(d.total)) for v in d.individual)
    assert all(b >= a - 1e-12 * max(1.0, abs(d.total)) for a, b in zip(d.cumulative, d.cumulative[1:]))


@settings(max_examples=100, deadline=None)
@given(grids, st.sampled_from(["range", "variance"]), st.randoms(use_true_random=False))
def test_label_permutation_invariance(table, measure, random):
    axis = random.randrange(table.ndim)
    perm = list(range(table.shape[axis]))
    random.shuffle(perm)
    a = decompose(_grid(table), measure)
    b = decompose(_grid(np.take(table, perm, axis=axis)), measure)
    assert b.cumulative == pytest.approx(a.cumulative, abs=1e-12)


def test_monotonicity_violation_raises(monkeypatch):
    # neither measure can shrink the cumulative, so stub the marginal values
    from floodbayes import uq

    monkeypatch.setattr(uq, "marginal_cumulative", lambda grid, z, measure="range": [3.0, 1.0][z - 1])
    with pytest.raises(DecompositionError, match="decreases"):
        uq.decompose(_grid(SPEC_TABLE), "range")


def test_reordered_grid():
    t = np.arange(12.0).reshape(2, 3, 2)
    g = ScenarioGrid(t, ("prior", "structure", "parameter"))
    r = g.reordered(("parameter", "prior", "structure"))
    assert r.scenario_counts == (2, 2, 3)
    assert r.estimates[1, 0, 2] == t[0, 2, 1]
    with pytest.raises(ValidationError):
        g.reordered(("prior", "structure"))


def test_anova_additive_and_constant():
    f = np.array([0.0, 1.5, -2.0])
    gb = np.array([3.0, 0.5])
    add = _grid(f[:, None] + gb[None, :])
    eff = anova_effects(add)
    assert eff.pairwise[(0, 1)] == pytest.approx(0.0, abs=1e-24)
    assert eff.main == pytest.approx((np.var(f), np.var(gb)))
    zero = anova_effects(_grid(np.full((2, 2, 3), 7.0)))
    assert zero.main == (0.0, 0.0, 0.0)
    assert all(v == 0.0 for v in zero.interactions.values())
    with pytest.raises(ValidationError):
        anova_effects(add, "range")


def test_anova_matches_loops_on_random_table():
    rng = np.random.default_rng(8)
    t = rng.normal(size=(2, 2, 3))
    eff = anova_effects(_grid(t))
    table = {idx: float(t[idx]) for idx in itertools.product(range(2), range(2), range(3))}
    main, pair = anova_brute_3(table, (2, 2, 3))
    assert eff.main == pytest.approx(main, rel=1e-12)
    for k, v in pair.items():
        assert eff.pairwise[k] == pytest.approx(v, rel=1e-12)
    # the full functional ANOVA partitions the table variance
    assert sum(eff.main) + sum(eff.interactions.values()) == pytest.approx(np.var(t), rel=1e-12)


def test_anova_reconstruction_against_decompose():
    rng = np.random.default_rng(8)
    t = rng.normal(size=(2, 2, 3))
    eff = anova_effects(_grid(t))
    d = decompose(_grid(t), "variance")
    # attributing every interaction to its earliest source reproduces individual(z)
    assert eff.individual_full() == pytest.approx(d.individual, abs=1e-12)
    # main plus pairwise terms only misses the three-way term, which sits in source 0
    recon = eff.individual_pairwise()
    three_way = eff.interactions[(0, 1, 2)]
    assert three_way > 0
    assert recon[0] == pytest.approx(d.individual[0] - three_way, abs=1e-12)
    assert recon[1:] == pytest.approx(d.individual[1:], abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(float, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=5), elements=st.floats(-50, 50)))
def test_anova_pairwise_reconstruction_exact_for_two_sources(table):
    eff = anova_effects(_grid(table))
    d = decompose(_grid(table), "variance")
    assert eff.individual_pairwise() == pytest.approx(d.individual, abs=1e-9)


def test_derive_seed_stable():
    a = derive_seed(20240601, "fit", 3)
    assert a == derive_seed(20240601, "fit", 3)
    assert 0 <= a < 2**64
    assert len({derive_seed(1, "fit", k) for k in range(100)}) == 100
    assert derive_seed(1, "fit", 0) != derive_seed(1, "grid", 0)


def test_grid_cells_prior_major():
    cells = grid_cells(["uniform", "gauss-wide"], ["stationary", "nonstationary"])
    assert [(c.prior.name, c.structure.value) for c in cells] == [
        ("uniform", "stationary"),
        ("uniform", "nonstationary"),
        ("gauss-wide", "stationary"),
        ("gauss-wide", "nonstationary"),
    ]


@pytest.fixture(scope="module")
def small_grid_args(synthetic_dataset):
    return dict(
        dataset=synthetic_dataset,
        priors=[resolve_prior(p) for p in ("uniform", "gauss-wide", "gauss-narrow")],
        structures=[ModelStructure.STATIONARY, ModelStructure.NONSTATIONARY],
        T=100,
        covariate_ref=CovariateRef(),
        chain_config=ChainConfig(seed=7, iterations=4000, burn_in=1000),
        parameter_scenarios=1000,
    )


def test_build_scenario_grid(small_grid_args, synthetic_dataset):
    g = build_scenario_grid(**small_grid_args)
    assert g.scenario_counts == (3, 2, 1000)
    assert g.estimates.size == 6000
    assert g.source_names == ("prior", "structure", "parameter")
    again = build_scenario_grid(**small_grid_args)
    assert np.array_equal(g.estimates, again.estimates)
    other = build_scenario_grid(**{**small_grid_args, "covariate_ref": CovariateRef("fixed_value", -3.0)})
    assert np.array_equal(g.estimates[:, 0], other.estimates[:, 0])
    assert not np.array_equal(g.estimates[:, 1], other.estimates[:, 1])
    d = decompose(g, "variance")
    assert sum(d.individual) == pytest.approx(d.total, abs=1e-9)


def test_build_scenario_grid_names_failing_cell():
    bad = dataset_from_arrays(np.arange(1950, 1962), np.linspace(1, 2, 12))
    spec = PriorSpec.uniform({"mu0": (50.0, 60.0)})
    with pytest.raises(InitializationError, match="cell 0"):
        build_scenario_grid(bad, [spec], ["stationary"], 10, CovariateRef("fixed_value", 0.0),
                            ChainConfig(seed=1, iterations=100, burn_in=10), 10)
