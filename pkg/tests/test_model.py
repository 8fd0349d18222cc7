import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxlinear.innovations import (
    UNIT_FRECHET,
    Frechet,
    LogUniform,
    PointMassMixture,
    UnsupportedDistribution,
    from_dict,
)
from maxlinear.model import (
    FactorModel,
    MaxLinearNetwork,
    NoiseSpec,
    ObservationSet,
    cdf,
    drought_scenario,
    random_network,
    simulate,
    simulate_factors,
    tail_dependence,
    tail_dependence_approx,
)
from maxlinear.tropical import is_fixed_point


def chain():
    return MaxLinearNetwork.from_edges(3, [(0, 1, 2.0), (1, 2, 3.0)])


# -- innovations ---------------------------------------------------------------

@pytest.mark.parametrize("dist", [Frechet(1.0, 1.0), Frechet(2.5, 0.7), LogUniform(0.5, 4.0)])
def test_ppf_inverts_cdf(dist):
    u = np.linspace(0.01, 0.99, 25)
    assert np.allclose(dist.cdf(dist.ppf(u)), u, atol=1e-12)
    assert np.allclose(dist.ppf_log(np.log(u)), dist.ppf(u), rtol=1e-12)


@pytest.mark.parametrize("dist", [Frechet(1.0, 1.0), Frechet(2.0, 3.0), LogUniform(0.5, 4.0)])
def test_pdf_is_cdf_derivative(dist):
    z = np.array([0.8, 1.3, 2.2, 3.1])
    h = 1e-6
    num = (dist.cdf(z + h) - dist.cdf(z - h)) / (2 * h)
    assert np.allclose(dist.pdf(z), num, rtol=1e-5)


def test_frechet_extreme_tail_in_log_space():
    # F(b) underflows for tiny b, but the truncated draw stays below b
    logu = float(UNIT_FRECHET.logcdf(1e-3)) + np.log(0.5)
    assert 0 < UNIT_FRECHET.ppf_log(logu) <= 1e-3


def test_point_mass_has_no_density():
    pm = PointMassMixture((2.0, 1.0), (0.5, 0.5))
    assert pm.atoms == (1.0, 2.0)
    assert pm.cdf(1.5) == 0.5
    assert pm.ppf(0.75) == 2.0
    with pytest.raises(UnsupportedDistribution):
        pm.pdf(1.0)


def test_innovation_dict_round_trip():
    for dist in (Frechet(2.0, 0.5), LogUniform(1.0, 3.0), PointMassMixture((1.0,), (1.0,))):
        assert from_dict(dist.to_dict()) == dist
    with pytest.raises(ValueError):
        from_dict({"dist": "gumbel"})


def test_bad_parameters():
    with pytest.raises(ValueError):
        Frechet(-1.0)
    with pytest.raises(ValueError):
        LogUniform(2.0, 1.0)
    with pytest.raises(ValueError):
        PointMassMixture((1.0, 2.0), (0.3, 0.3))


# -- models and simulation ---------------------------------------------------

def test_network_exposes_star_and_edges():
    net = chain()
    assert net.Cstar[2, 0] == 6.0
    assert net.edges() == [(0, 1, 2.0), (1, 2, 3.0)]
    with pytest.raises(ValueError):
        net.C[0, 0] = 5.0


def test_factor_model_needs_loaded_rows():
    with pytest.raises(ValueError):
        FactorModel(np.array([[1.0, 0.0], [0.0, 0.0]]))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10**6))
def test_simulated_rows_are_fixed_points(d, seed):
    net = random_network(d, "dag", seed=seed)
    obs = simulate(net, 50, seed=seed)
    for row in obs.values:
        assert is_fixed_point(net.Cstar, row, 1e-9)


def test_projection_lower_bound():
    net = random_network(8, "tree", seed=4)
    X = simulate(net, 400, seed=2).values
    for p, c, _ in net.edges():
        assert np.all(np.log(X[:, c]) - np.log(X[:, p]) >= np.log(net.Cstar[c, p]) - 1e-9)


def test_simulation_is_block_reproducible():
    net = random_network(5, seed=1)
    a = simulate(net, 5000, seed=9).values
    b = simulate(net, 5000, seed=9).values
    assert np.array_equal(a, b)
    # the first block does not depend on how many rows follow
    assert np.array_equal(simulate(net, 100, seed=9).values, a[:100])


def test_noise_and_missingness():
    net = random_network(6, seed=0)
    obs = simulate(net, 4000, NoiseSpec(sigma=0.1, mcar_rate=0.2), seed=1)
    assert abs(obs.mask.mean() - 0.2) < 0.02
    clean = simulate(net, 4000, seed=1).values
    ratio = np.log(obs.values[~obs.mask] / clean[~obs.mask])
    assert abs(ratio.std() - 0.1) < 0.01


def test_extreme_triggered_missingness():
    net = random_network(4, seed=0)
    obs = simulate(net, 5000, NoiseSpec(extreme_missing_prob=0.9, extreme_quantile=0.9), seed=3)
    assert 0.07 < obs.mask.mean() < 0.10


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(sigma=-1)
    with pytest.raises(ValueError):
        NoiseSpec(mcar_rate=1.0)


def test_observation_log_names_bad_cell():
    obs = ObservationSet(np.array([[1.0, 2.0], [0.0, 3.0]]), labels=["a", "b"])
    with pytest.raises(ValueError, match=r"row 2, column 'a'"):
        obs.log()


def test_cdf_chain_example():
    assert abs(cdf(chain(), [1.0, 2.0, 6.0]) - math.exp(-5.0 / 3.0)) < 1e-12


def test_cdf_properties():
    net = random_network(5, "dag", seed=3)
    x = np.array([1.0, 2.0, 0.5, 3.0, 1.5])
    base = cdf(net, x)
    for i in range(5):
        y = x.copy()
        y[i] *= 2
        assert cdf(net, y) >= base
    assert cdf(net, x * 1e9) > 1 - 1e-8
    with pytest.raises(ValueError):
        cdf(net, -x)


def test_cdf_rejects_non_frechet():
    net = MaxLinearNetwork.from_edges(2, [(0, 1, 1.0)], [LogUniform(1, 2)] * 2)
    with pytest.raises(UnsupportedDistribution):
        cdf(net, [1.0, 1.0])


def test_tail_dependence_examples():
    C = np.array([[1.0, 0.0], [2.0, 1.0]])
    y = np.array([1.0, 1.0])
    assert tail_dependence(C, y) == 3.0
    assert tail_dependence_approx(C, y) == 2.0
    assert tail_dependence(C, 3.5 * y) == 3.5 * tail_dependence(C, y)


def test_random_tree_is_a_tree():
    for seed in range(20):
        net = random_network(7, "tree", seed=seed)
        assert net.dag.is_tree()
        assert all(0.5 <= w <= 2.0 for _, _, w in net.edges())


def test_drought_scenario_regimes():
    net = random_network(6, seed=0)
    obs = drought_scenario(net, 3000, extreme_rate=0.1, seed=2)
    assert abs(obs.regime.mean() - 0.1) < 0.02
    ext = obs.values[obs.regime == 1]
    for row in ext:
        assert is_fixed_point(net.Cstar, row)
    pure = drought_scenario(net, 500, extreme_rate=1.0, seed=2)
    assert np.array_equal(pure.values, simulate(net, 500, seed=2).values)


def test_simulate_factors_consistent():
    net = chain()
    Z, X = simulate_factors(net, 10, seed=0)
    assert np.array_equal(X[:, 0], Z[:, 0])
    assert np.allclose(X[:, 2], np.maximum.reduce([6 * Z[:, 0], 3 * Z[:, 1], Z[:, 2]]))
