import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxlinear.dag import CycleError, Dag, dag_queries
from maxlinear.model import random_network
from maxlinear.tropical import (
    NEG_INF,
    as_tropical,
    cone_membership,
    from_log,
    is_fixed_point,
    kleene_star,
    maxplus_matmul,
    maxplus_matvec,
    rel_close,
    residuate,
    to_log,
    trop_matmul,
    trop_matvec,
)

from oracles import kleene_power_oracle

CHAIN_C = np.array([[0, 0, 0], [2, 0, 0], [0, 3, 0]], dtype=float)
CHAIN_STAR = np.array([[1, 0, 0], [2, 1, 0], [6, 3, 1]], dtype=float)


def test_matvec_worked_example():
    C = np.array([[1, 2], [0, 3]], dtype=float)
    assert trop_matvec(C, [1, 1]).tolist() == [2, 3]
    assert trop_matvec(C, [4, 1]).tolist() == [4, 3]


def test_matvec_batch_matches_rows():
    rng = np.random.default_rng(0)
    C = rng.random((4, 3))
    Z = rng.random((7, 3))
    batch = trop_matvec(C, Z)
    for r in range(7):
        assert np.array_equal(batch[r], trop_matvec(C, Z[r]))


def test_shape_and_sign_errors():
    with pytest.raises(ValueError):
        trop_matvec(np.ones((2, 2)), np.ones(3))
    with pytest.raises(ValueError):
        trop_matvec(np.ones((2, 2)), [-1.0, 1.0])
    with pytest.raises(ValueError):
        as_tropical([[1.0, -2.0]])
    with pytest.raises(ValueError):
        trop_matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_log_view_round_trip():
    C = np.array([[0.0, 2.5], [1.0, 0.0]])
    L = to_log(C)
    assert L[0, 0] == NEG_INF and L[1, 0] == 0.0
    assert np.array_equal(from_log(L), C)


def test_maxplus_agrees_with_maxtimes():
    rng = np.random.default_rng(1)
    A = rng.random((3, 4)) * (rng.random((3, 4)) < 0.7)
    B = rng.random((4, 2)) * (rng.random((4, 2)) < 0.7)
    z = rng.random(4)
    assert np.allclose(from_log(maxplus_matmul(to_log(A), to_log(B))), trop_matmul(A, B), rtol=1e-12)
    assert np.allclose(np.exp(maxplus_matvec(to_log(A), np.log(z))), trop_matvec(A, z), rtol=1e-12)


def test_kleene_chain_example():
    assert np.array_equal(kleene_star(CHAIN_C), CHAIN_STAR)


def test_kleene_log_mode():
    S = kleene_star(to_log(CHAIN_C), log=True)
    assert np.allclose(from_log(S), CHAIN_STAR, rtol=1e-15)


def test_kleene_diamond_takes_best_path():
    # 1 -> 2 -> 4 (2*3) and 1 -> 3 -> 4 (5*1)
    C = np.zeros((4, 4))
    C[1, 0], C[3, 1], C[2, 0], C[3, 2] = 2, 3, 5, 1
    assert kleene_star(C)[3, 0] == 6


def test_kleene_rejects_cycle():
    C = np.array([[0, 1], [1, 0]], dtype=float)
    with pytest.raises(CycleError) as err:
        kleene_star(C)
    assert sorted(err.value.cycle) == [0, 1]


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9), st.integers(0, 10**6))
def test_kleene_matches_power_oracle(d, seed):
    C = random_network(d, "dag", seed=seed, density=0.5).C
    S = kleene_star(C)
    assert np.array_equal(S, kleene_power_oracle(C))
    # idempotence holds up to the association order of path products
    assert np.all(rel_close(trop_matmul(S, S), S, 1e-12))
    assert np.all(S >= np.maximum(np.eye(d), C))


def test_fixed_point_of_star_image():
    z = np.array([1.0, 0.5, 0.2])
    x = trop_matvec(CHAIN_STAR, z)
    assert is_fixed_point(CHAIN_STAR, x)
    assert not is_fixed_point(CHAIN_STAR, np.array([1.0, 1.0, 1.0]))


def test_residuation_worked_example():
    # chain rows K = {2, 3}, x = (4, 12): greatest witness (2, 4, 12)
    res = cone_membership(CHAIN_STAR[[1, 2]], np.array([4.0, 12.0]))
    assert res.member
    assert np.array_equal(res.witness_z, [2.0, 4.0, 12.0])
    bad = cone_membership(CHAIN_STAR[[1, 2]], np.array([4.0, 1.0]))
    assert not bad.member and bad.violated == (0,)


def test_residuate_unbounded_columns():
    z, unbounded = residuate(np.array([[1.0, 0.0]]), np.array([2.0]))
    assert z[0] == 2.0 and np.isinf(z[1]) and unbounded.tolist() == [False, True]


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_cone_membership_constructive_round_trip(seed):
    rng = np.random.default_rng(seed)
    C = rng.random((3, 4)) + 0.01
    z = rng.random(4) + 0.01
    x = trop_matvec(C, z)
    res = cone_membership(C, x)
    assert res.member
    assert np.all(rel_close(trop_matvec(C, res.witness_z), x))
    assert np.all(res.witness_z >= z * (1 - 1e-12))


def test_dag_queries():
    dag = Dag.from_parent_child(4, [(0, 1), (1, 2), (0, 3)])
    q = dag_queries(dag)
    assert q["order"][0] == 0
    assert dag.ancestors(2) == {0, 1}
    assert q["descendants"][0].sum() == 3
    assert dag.is_tree()
    assert not Dag.from_parent_child(3, [(0, 2), (1, 2)]).is_tree()


def test_dag_rejects_bad_edges():
    with pytest.raises(ValueError):
        Dag(2, frozenset({(0, 5)}))
    with pytest.raises(CycleError):
        Dag.from_parent_child(3, [(0, 1), (1, 2), (2, 0)])
