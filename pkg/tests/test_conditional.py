import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxlinear.conditional import (
    ConditionalSampler,
    ConditioningEvent,
    InfeasibleEventError,
    constraint_residual,
    enumerate_scenarios,
    rejection_oracle,
    sample_conditional,
    support_cells,
)
from maxlinear.innovations import UNIT_FRECHET, LogUniform, PointMassMixture, UnsupportedDistribution
from maxlinear.model import MaxLinearNetwork
from maxlinear.tropical import trop_matvec

from oracles import brute_force_hit_maps, ks_statistic

CHAIN = MaxLinearNetwork.from_edges(3, [(0, 1, 2.0), (1, 2, 3.0)])


def unit(p):
    return (UNIT_FRECHET,) * p


def test_event_parse_and_validation():
    ev = ConditioningEvent.parse("3=4.0, 1=2.5")
    assert ev.K == (2, 0) and ev.x.tolist() == [4.0, 2.5]
    assert ev.complement(4) == (1, 3)
    with pytest.raises(ValueError):
        ConditioningEvent((0, 0), [1.0, 2.0])
    with pytest.raises(ValueError):
        ConditioningEvent((0,), [0.0])


def test_single_row_scenarios_and_weights():
    # X = max(Z1, 2 Z2) = 4: argmax is Z2 with probability 2/3
    C = np.array([[1.0, 2.0]])
    ev = ConditioningEvent((0,), [4.0])
    scen = enumerate_scenarios(C, ev, unit(2))
    assert [s.forced for s in scen] == [{0: 4.0}, {1: 2.0}]
    expected = [4 * UNIT_FRECHET.pdf(4.0) * UNIT_FRECHET.cdf(2.0),
                2 * UNIT_FRECHET.pdf(2.0) * UNIT_FRECHET.cdf(4.0)]
    assert np.allclose([s.weight for s in scen], expected, rtol=1e-12)
    sampler = ConditionalSampler(C, ev, unit(2))
    assert np.allclose(sampler.probs, [1 / 3, 2 / 3], rtol=1e-12)


def test_chain_worked_example():
    ev = ConditioningEvent((1,), [4.0])
    sampler = ConditionalSampler(CHAIN.Cstar, ev, CHAIN.innovations)
    assert np.allclose(sampler.probs, [2 / 3, 1 / 3])
    cells = support_cells(sampler)
    assert all(c.fixed[1] == 12.0 for c in cells)
    assert all(np.isinf(c.free[2]) for c in cells)
    draws = sample_conditional(sampler, 2000, seed=3)
    assert np.all(draws.X[:, 1] == 4.0)
    assert np.all(draws.X[:, 2] >= 12.0)
    assert constraint_residual(CHAIN.Cstar, draws.Z, ev) <= 1e-12
    for sid, cell in enumerate(cells):
        rows = np.flatnonzero(draws.scenario == sid)[:50]
        for r in rows:
            assert cell.contains(draws.X_Kbar[r], draws.Z[r])


def test_hit_maps_are_merged_by_forced_set():
    # rows 1 and 2 both hit by factor 0 -> forced {0}; (1, 0) forces {0, 1}
    C = np.array([[1.0, 1.0], [1.0, 0.0]])
    ev = ConditioningEvent((0, 1), [1.0, 1.0])
    sampler = ConditionalSampler(C, ev, unit(2))
    assert len(sampler.scenarios) == 2
    assert [c.forced for c in sampler.cells] == [{0: 1.0}]
    assert sampler.probs.tolist() == [1.0]


def test_infeasible_event():
    ev = ConditioningEvent((1, 2), [4.0, 1.0])
    with pytest.raises(InfeasibleEventError) as err:
        ConditionalSampler(CHAIN.Cstar, ev, CHAIN.innovations)
    assert err.value.coordinate == 1


def test_requires_densities():
    with pytest.raises(UnsupportedDistribution):
        ConditionalSampler(np.eye(1), ConditioningEvent((0,), [1.0]), (PointMassMixture((1.0,), (1.0,)),))


def test_enumeration_limit():
    C = np.ones((7, 10))
    with pytest.raises(ValueError, match="limit"):
        enumerate_scenarios(C, ConditioningEvent(tuple(range(7)), np.ones(7)), unit(10))


def _grid_instance(seed, p, k):
    rng = np.random.default_rng(seed)
    d = k + int(rng.integers(0, 3))
    C = rng.choice([0.0, 1.0, 2.0, 4.0], size=(d, p))
    C[np.arange(d), rng.integers(0, p, size=d)] = rng.choice([1.0, 2.0], size=d)
    K = tuple(sorted(rng.choice(d, size=k, replace=False).tolist()))
    if rng.random() < 0.8:
        x = trop_matvec(C, rng.choice([1.0, 2.0, 4.0], size=p))[list(K)]
    else:
        x = rng.choice([1.0, 2.0, 4.0, 8.0], size=k)
    return C, K, x


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 10**6))
def test_enumeration_equals_brute_force(p, k, seed):
    C, K, x = _grid_instance(seed, p, k)
    ev = ConditioningEvent(K, x)
    expected = brute_force_hit_maps(C, K, x)
    try:
        got = sorted(s.hit for s in enumerate_scenarios(C, ev, unit(p)))
    except InfeasibleEventError:
        got = []
    assert got == expected


def test_truncated_draws_respect_caps_loguniform():
    C = np.array([[1.0, 3.0], [0.5, 1.0]])
    ev = ConditioningEvent((0,), [2.0])
    sampler = ConditionalSampler(C, ev, (LogUniform(0.1, 10.0),) * 2)
    draws = sample_conditional(sampler, 500, seed=1)
    assert np.all(draws.Z <= sampler.bounds * (1 + 1e-12))
    assert constraint_residual(C, draws.Z, ev) <= 1e-12


def test_sampler_matches_rejection_small():
    C = np.array([[1.0, 0.5, 0.0], [0.3, 1.0, 1.0]])
    ev = ConditioningEvent((0,), [2.0])
    sampler = ConditionalSampler(C, ev, unit(3))
    exact = sample_conditional(sampler, 5000, seed=2).X_Kbar
    approx = rejection_oracle(C, ev, unit(3), 0.05, 5000, seed=3).X_Kbar
    assert ks_statistic(exact[:, 0], approx[:, 0]) <= 0.05


def test_sampling_is_deterministic():
    sampler = ConditionalSampler(CHAIN.Cstar, ConditioningEvent((2,), [5.0]), CHAIN.innovations)
    a = sample_conditional(sampler, 5000, seed=4)
    b = sample_conditional(sampler, 5000, seed=4)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.scenario, b.scenario)


def test_rejection_oracle_errors():
    with pytest.raises(ValueError):
        rejection_oracle(np.eye(1), ConditioningEvent((0,), [1.0]), unit(1), 0.0, 10)
    with pytest.raises(RuntimeError):
        rejection_oracle(np.eye(1), ConditioningEvent((0,), [1e9]), unit(1), 1e-9, 10, max_draws=1000)


def test_scenario_weight_is_log_scale_density():
    # one factor, X = Z: weight is z f(z), the density of log X at log x
    ev = ConditioningEvent((0,), [3.0])
    (s,) = enumerate_scenarios(np.eye(1), ev, unit(1))
    assert math.isclose(s.weight, 3.0 * UNIT_FRECHET.pdf(3.0), rel_tol=1e-12)


def test_rejection_oracle_projection_modes():
    ev = ConditioningEvent((1,), [4.0])
    # on the slice X_2 = 4 the law has X_3 >= 12, with an atom at 12
    proj = rejection_oracle(CHAIN.Cstar, ev, unit(3), 0.05, 2000, seed=1)
    assert np.all(proj.X_Kbar[:, 1] >= 12.0 * (1 - 1e-12))
    raw = rejection_oracle(CHAIN.Cstar, ev, unit(3), 0.05, 2000, seed=1, project=False)
    assert np.any(raw.X_Kbar[:, 1] < 12.0 * (1 - 1e-3))
    assert np.all(raw.X_Kbar[:, 1] >= 12.0 * 0.95 * (1 - 1e-12))
    two = ConditioningEvent((0, 1), [1.0, 4.0])
    with pytest.raises(ValueError):
        rejection_oracle(CHAIN.Cstar, two, unit(3), 0.05, 10, project=True)
