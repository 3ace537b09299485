import numpy as np
import pytest

from dirichlet_bn.core import CategoricalDataset, Dag, Variable
from dirichlet_bn.scores import BDeu, K2, score
from dirichlet_bn.search import (
    FamilyScoreCache,
    SearchLimitError,
    cpdag,
    enumerate_dags,
    equivalence_class,
    exact_dp_best,
    exhaustive_best,
)
from dirichlet_bn.simulate import BayesNet, forward_sample

from oracles import random_dataset, random_net, robinson


def binary(n):
    return [Variable(f"x{i}", 2) for i in range(n)]


@pytest.mark.parametrize("N", range(1, 5))
def test_enumeration_counts_unique_acyclic(N):
    dags = list(enumerate_dags(N))
    assert len(dags) == robinson(N)[N]
    assert len({d.masks for d in dags}) == len(dags)
    for d in dags:
        d.topological_order()


def test_enumeration_small_cases():
    assert [d.arcs for d in enumerate_dags(1)] == [[]]
    assert sorted(d.arcs for d in enumerate_dags(2)) == [[], [(0, 1)], [(1, 0)]]


def test_enumeration_limit():
    with pytest.raises(SearchLimitError):
        next(enumerate_dags(6))


def test_cache_matches_direct_scores():
    rng = np.random.default_rng(1)
    data = random_dataset(rng, [Variable("a", 2), Variable("b", 3), Variable("c", 2)], 30)
    cache = FamilyScoreCache(data, "exact-ml", BDeu(1))
    for dag in enumerate_dags(3):
        assert cache.dag_score(dag) == score(data, dag, "exact-ml", BDeu(1)).total


# ---------------------------------------------------------------------------
# exhaustive search


def test_empty_data_breaks_tie_to_empty_graph():
    data = CategoricalDataset(binary(2))
    res = exhaustive_best(data, "exact-ml", BDeu(1))
    assert res.dag == Dag(2)
    assert res.score == 0
    assert res.n_ties == 3 and res.n_candidates == 3
    assert exact_dp_best(data, "exact-ml", BDeu(1)).dag == Dag(2)


@pytest.fixture
def copied_pair():
    rng = np.random.default_rng(2)
    x0 = rng.integers(0, 2, 100)
    return CategoricalDataset(binary(2), np.column_stack([x0, x0]))


@pytest.mark.parametrize("ess", [1.0, 1e6])
def test_dependent_pair_gets_one_arc(copied_pair, ess):
    scores = {d.masks: score(copied_pair, d, "exact-ml", BDeu(ess)).total for d in enumerate_dags(2)}
    assert scores[(0, 1)] == pytest.approx(scores[(2, 0)], abs=1e-9)
    assert scores[(0, 1)] > scores[(0, 0)]
    res = exhaustive_best(copied_pair, "exact-ml", BDeu(ess))
    assert res.dag.arcs == [(0, 1)]  # lexicographic tie-break inside the class
    assert res.n_ties == 2


def test_result_score_is_rescored_value(copied_pair):
    res = exhaustive_best(copied_pair, "exact-ml", K2())
    assert res.score == score(copied_pair, res.dag, "exact-ml", K2()).total


def test_exhaustive_limit():
    data = CategoricalDataset(binary(6))
    with pytest.raises(SearchLimitError):
        exhaustive_best(data, "exact-ml", BDeu(1))


def test_repeated_runs_identical():
    rng = np.random.default_rng(9)
    data = random_dataset(rng, binary(4), 30)
    runs = [exhaustive_best(data, "exact-ml", BDeu(1)).dag for _ in range(3)]
    runs += [exact_dp_best(data, "exact-ml", BDeu(1)).dag for _ in range(3)]
    assert len(set(runs)) == 1


# ---------------------------------------------------------------------------
# dynamic programming


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("kind, scheme", [("exact-ml", BDeu(1)), ("exact-ml", K2()), ("bic", None)])
def test_dp_matches_exhaustive(seed, kind, scheme):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(2, 5))
    variables = [Variable(f"v{i}", int(rng.integers(2, 4))) for i in range(N)]
    data = forward_sample(random_net(rng, variables, concentration=0.5), int(rng.integers(1, 300)), seed)
    a = exhaustive_best(data, kind, scheme)
    b = exact_dp_best(data, kind, scheme)
    assert b.score == pytest.approx(a.score, abs=1e-9)
    assert b.dag == a.dag


def test_dp_recovers_chain_skeleton():
    variables = binary(8)
    chain = Dag.from_arcs(8, [(i, i + 1) for i in range(7)])
    cpts = [[[0.7, 0.3]]] + [[[0.85, 0.15], [0.2, 0.8]]] * 7
    data = forward_sample(BayesNet(variables, chain, cpts), 5000, 3)
    res = exact_dp_best(data, "exact-ml", BDeu(1))
    assert equivalence_class(res.dag).skeleton == equivalence_class(chain).skeleton


def test_dp_max_parents():
    variables = binary(4)
    collider = Dag.from_arcs(4, [(0, 3), (1, 3), (2, 3)])
    cpts = [[[0.5, 0.5]]] * 3 + [[[0.95, 0.05]] + [[0.05, 0.95]] * 7]
    data = forward_sample(BayesNet(variables, collider, cpts), 3000, 0)
    free = exact_dp_best(data, "exact-ml", BDeu(1))
    capped = exact_dp_best(data, "exact-ml", BDeu(1), max_parents=1)
    assert max(len(p) for p in capped.dag.parents) <= 1
    assert capped.score <= free.score
    assert free.dag == collider


def test_dp_limit():
    with pytest.raises(SearchLimitError):
        exact_dp_best(CategoricalDataset(binary(21)), "exact-ml", BDeu(1))


def test_dp_class_invariant_under_relabeling():
    rng = np.random.default_rng(4)
    variables = binary(5)
    net = random_net(rng, variables, Dag.from_arcs(5, [(0, 1), (1, 2), (0, 3), (3, 4), (2, 4)]), 0.3)
    data = forward_sample(net, 3000, 1)
    base = exact_dp_best(data, "exact-ml", BDeu(1)).dag
    perm = rng.permutation(5)  # new column c holds old variable perm[c]
    shuffled = CategoricalDataset(variables, data.records[:, perm])
    learned = exact_dp_best(shuffled, "exact-ml", BDeu(1)).dag
    back = Dag.from_arcs(5, [(int(perm[u]), int(perm[v])) for u, v in learned.arcs])
    assert equivalence_class(back) == equivalence_class(base)


# ---------------------------------------------------------------------------
# equivalence classes


def test_equivalence_class_examples():
    assert equivalence_class(Dag.from_arcs(2, [(0, 1)])) == equivalence_class(Dag.from_arcs(2, [(1, 0)]))
    collider = Dag.from_arcs(3, [(0, 2), (1, 2)])
    chain = Dag.from_arcs(3, [(0, 2), (2, 1)])
    assert equivalence_class(collider) != equivalence_class(chain)
    assert equivalence_class(collider).v_structures == {(0, 2, 1)}


def test_three_node_classes_match_bdeu_score_partition():
    dags = list(enumerate_dags(3))
    assert len({equivalence_class(d) for d in dags}) == 11
    rng = np.random.default_rng(7)
    variables = [Variable("a", 2), Variable("b", 3), Variable("c", 2)]
    datasets = [random_dataset(rng, variables, 40) for _ in range(3)]
    sig = {d: tuple(score(x, d, "exact-ml", BDeu(1)).total for x in datasets) for d in dags}
    for a in dags:
        for b in dags:
            same_scores = np.allclose(sig[a], sig[b], atol=1e-9, rtol=0)
            assert same_scores == (equivalence_class(a) == equivalence_class(b))


def test_cpdag():
    chain = Dag.from_arcs(3, [(0, 1), (1, 2)])
    directed, undirected = cpdag(chain)
    assert not directed and undirected == {(0, 1), (1, 2)}
    # collider compels its arcs, and Meek rule 1 then orients 2 -> 3
    d = Dag.from_arcs(4, [(0, 2), (1, 2), (2, 3)])
    directed, undirected = cpdag(d)
    assert directed == {(0, 2), (1, 2), (2, 3)} and not undirected
    for a in enumerate_dags(3):
        for b in enumerate_dags(3):
            assert (cpdag(a) == cpdag(b)) == (equivalence_class(a) == equivalence_class(b))
