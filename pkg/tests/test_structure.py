import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxlinear.arborescence import (
    Arborescence,
    NoArborescenceError,
    arborescence_weight,
    edmonds_arborescence,
)
from maxlinear.dag import Dag
from maxlinear.model import MaxLinearNetwork, NoiseSpec, ObservationSet, random_network, simulate
from maxlinear.structure import (
    correlation_scores,
    evaluate,
    learn_tree,
    qtree_scores,
)

from oracles import exhaustive_arborescence


# -- Chu-Liu/Edmonds ---------------------------------------------------------

def test_edmonds_three_node_example():
    # scores[i, j] weighs j -> i; best is 0 -> 1 -> 2
    S = np.full((3, 3), -10.0)
    S[1, 0], S[2, 1], S[0, 2] = 5, 4, 1
    t = edmonds_arborescence(S)
    assert t.root == 0 and t.parent == [-1, 0, 1] and t.weight == 9


def test_edmonds_contracts_cycles():
    # 1 <-> 2 is the greedy cycle; the root must break into it
    S = np.full((3, 3), np.nan)
    S[1, 2], S[2, 1] = 10, 10
    S[1, 0], S[2, 0] = 1, 2
    t = edmonds_arborescence(S, root=0)
    assert t.parent == [-1, 2, 0] and t.weight == 12


def test_edmonds_minimize():
    S = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    t = edmonds_arborescence(S, objective="minimize", root=0)
    assert t.weight == 2


def test_edmonds_unreachable():
    S = np.full((3, 3), np.nan)
    S[1, 0] = 1.0
    with pytest.raises(NoArborescenceError) as err:
        edmonds_arborescence(S, root=0)
    assert err.value.unreachable == [2]


def test_edmonds_secondary_breaks_ties():
    S = np.zeros((3, 3))
    sec = np.zeros((3, 3))
    sec[1, 2], sec[0, 1] = 1.0, 1.0
    t = edmonds_arborescence(S, secondary=sec)
    assert t.parent[1] == 2 and t.parent[0] == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10**6))
def test_edmonds_matches_exhaustive(d, seed):
    W = np.random.default_rng(seed).normal(size=(d, d))
    t = edmonds_arborescence(W)
    assert t.weight == exhaustive_arborescence(W)
    assert arborescence_weight(W, t.parent) == t.weight


def test_arborescence_validation():
    with pytest.raises(ValueError):
        Arborescence(0, [-1, 2, 1])
    assert Arborescence(1, [1, -1, 0]).to_dag().is_tree()


# -- scorers -------------------------------------------------------------------

def test_correlation_scores_symmetric_and_flag_low_support():
    vals = np.array([[1, 2, np.nan], [2, 4, np.nan], [3, 5, 1.0], [4, 9, np.nan]], dtype=float)
    S = correlation_scores(ObservationSet(vals))
    assert np.isclose(S.scores[0, 1], S.scores[1, 0])
    assert not S.usable[0, 2] and S.support[0, 2] == 1


def test_qtree_scores_atom_on_true_edges():
    net = random_network(5, "tree", seed=2)
    S = qtree_scores(simulate(net, 500, seed=1))
    for p, c, w in net.edges():
        # log X_c - log X_p has an atom at log c_cp
        assert S.tiebreak[c, p] > 0.1
        assert np.isclose(S.coef[c, p], w, rtol=1e-12)


def test_qtree_parameter_checks():
    obs = simulate(random_network(3, seed=0), 50, seed=0)
    with pytest.raises(ValueError):
        qtree_scores(obs, r=0)
    with pytest.raises(ValueError):
        learn_tree(obs, method="magic")


def test_learn_tree_recovers_noise_free_tree():
    net = random_network(8, "tree", seed=5)
    res = learn_tree(simulate(net, 500, seed=6))
    rep = evaluate(res.tree, net.dag)
    assert rep.recall == 1.0 and rep.precision == 1.0
    assert res.tree.coef


def test_learn_tree_with_missing_data():
    net = random_network(8, "tree", seed=7)
    obs = simulate(net, 1000, NoiseSpec(sigma=0.1, mcar_rate=0.2), seed=8)
    assert evaluate(learn_tree(obs).tree, net.dag).recall >= 0.7


def test_learn_tree_fixed_root():
    net = random_network(6, "tree", seed=1)
    res = learn_tree(simulate(net, 300, seed=1), root=3)
    assert res.tree.root == 3


def test_correlation_baseline_prefers_upstream_root():
    # chain 0 -> 1 -> 2 with unit coefficients: medians grow downstream
    net = MaxLinearNetwork.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
    obs = simulate(net, 2000, seed=3)
    tree = learn_tree(obs, "correlation").tree
    assert tree.root == 0 and tree.parent == [-1, 0, 1]
    # relabel so the upstream node is last: the tie-break follows the data, not the index
    perm = ObservationSet(obs.values[:, ::-1])
    assert learn_tree(perm, "correlation").tree.root == 2
    # an explicit root still wins
    assert learn_tree(obs, "correlation", root=2).tree.root == 2


def test_evaluate_classification():
    truth = Dag.from_parent_child(3, [(0, 1), (1, 2)])
    same = Arborescence(0, [-1, 0, 1])
    rep = evaluate(same, truth)
    assert rep.counts == {"correct": 2, "wrong": 0, "reversed": 0} and not rep.missed
    flipped = Arborescence(1, [1, -1, 1])
    rep = evaluate(flipped, truth)
    assert rep.reversed == [(1, 0)] and rep.correct == [(1, 2)] and rep.missed == [(0, 1)]
    wrong = Arborescence(0, [-1, 0, 0])
    rep = evaluate(wrong, truth)
    assert rep.wrong == [(0, 2)] and rep.recall == 0.5
    with pytest.raises(ValueError):
        evaluate(same, Dag.from_parent_child(4, [(0, 1)]))
