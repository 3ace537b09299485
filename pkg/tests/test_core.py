import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirichlet_bn.core import (
    CategoricalDataset,
    Dag,
    DataFormatError,
    DimensionMismatchError,
    ParentConfigIndexer,
    SufficientStats,
    Variable,
    count_stats,
    dag_from_dict,
    dag_to_dict,
    dataset_to_csv,
    eap_estimate,
    log_likelihood,
    read_csv,
)

from oracles import tally


def binary(n):
    return [Variable(f"x{i}", 2) for i in range(n)]


# ---------------------------------------------------------------------------
# data model


def test_variable_needs_two_states():
    with pytest.raises(DataFormatError):
        Variable("a", 1)


def test_dag_rejects_cycles_self_loops_and_duplicates():
    with pytest.raises(DataFormatError, match="cycle"):
        Dag.from_arcs(3, [(0, 1), (1, 2), (2, 0)])
    with pytest.raises(DataFormatError, match="self-loop"):
        Dag(2, [[0], []])
    with pytest.raises(DataFormatError, match="duplicate"):
        Dag(2, [[], [0, 0]])


def test_dag_masks_and_arcs():
    d = Dag.from_arcs(3, [(2, 1), (0, 1)])
    assert d.parents == ((), (0, 2), ())
    assert d.masks == (0, 0b101, 0)
    assert Dag.from_masks(d.masks) == d
    assert d.num_arcs == 2
    assert d.topological_order() == [0, 2, 1]


def test_indexer_first_parent_most_significant():
    ix = ParentConfigIndexer([2, 3])
    assert ix.q == 6
    assert ix.index([1, 0]) == 3
    assert ix.index([0, 2]) == 2
    assert [ix.states(j) for j in range(6)] == [
        (0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)
    ]
    assert ParentConfigIndexer([]).q == 1


@given(st.lists(st.integers(2, 4), min_size=0, max_size=4), st.data())
def test_indexer_bijection(cards, data):
    ix = ParentConfigIndexer(cards)
    j = data.draw(st.integers(0, ix.q - 1))
    assert ix.index(ix.states(j)) == j


def test_dataset_rejects_out_of_range_and_missing():
    with pytest.raises(DataFormatError):
        CategoricalDataset(binary(1), [[2]])
    with pytest.raises(DataFormatError, match="missing"):
        CategoricalDataset(binary(1), np.array([[np.nan]]))
    with pytest.raises(DimensionMismatchError):
        CategoricalDataset(binary(2), [[0]])


# ---------------------------------------------------------------------------
# count_stats


def test_count_stats_empty():
    st_ = count_stats(CategoricalDataset(binary(2)), Dag.from_arcs(2, [(0, 1)]))
    assert all(t.sum() == 0 for t in st_.tables)
    assert st_.tables[1].shape == (2, 2)


def test_count_stats_single_variable():
    st_ = count_stats(CategoricalDataset(binary(1), [[0], [0], [1]]), Dag(1))
    np.testing.assert_array_equal(st_.tables[0], [[2, 1]])


def test_count_stats_two_variables_hand_tally():
    data = CategoricalDataset(binary(2), [[0, 1], [1, 1], [1, 0]])
    st_ = count_stats(data, Dag.from_arcs(2, [(0, 1)]))
    np.testing.assert_array_equal(st_.tables[1], [[0, 1], [1, 1]])


def test_count_stats_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        count_stats(CategoricalDataset(binary(2)), Dag(3))


def test_count_stats_matches_tally_on_random_data():
    rng = np.random.default_rng(5)
    variables = [Variable("a", 3), Variable("b", 2), Variable("c", 4)]
    recs = np.column_stack([rng.integers(0, v.cardinality, 40) for v in variables])
    data = CategoricalDataset(variables, recs)
    dag = Dag.from_arcs(3, [(0, 2), (1, 2), (0, 1)])
    st_ = count_stats(data, dag)
    ref = tally(data, dag)
    for i, t in enumerate(st_.tables):
        for (j, k), c in ref[i].items():
            assert t[j, k] == c
        assert t.sum() == 40


records_strategy = st.lists(
    st.tuples(st.integers(0, 1), st.integers(0, 2), st.integers(0, 1)), max_size=40
)
dag_strategy = st.sampled_from([
    Dag(3),
    Dag.from_arcs(3, [(0, 1)]),
    Dag.from_arcs(3, [(0, 2), (1, 2)]),
    Dag.from_arcs(3, [(2, 0), (2, 1), (0, 1)]),
])
VARS3 = [Variable("a", 2), Variable("b", 3), Variable("c", 2)]


@given(records_strategy, dag_strategy, st.randoms())
def test_count_stats_permutation_invariant_and_sums(records, dag, rnd):
    data = CategoricalDataset(VARS3, records or None)
    shuffled = list(records)
    rnd.shuffle(shuffled)
    a = count_stats(data, dag)
    b = count_stats(CategoricalDataset(VARS3, shuffled or None), dag)
    for x, y in zip(a.tables, b.tables):
        np.testing.assert_array_equal(x, y)
        assert x.sum() == len(records)


# ---------------------------------------------------------------------------
# EAP


def _stats(*tables):
    return SufficientStats(tuple(np.array(t) for t in tables))


def test_eap_examples():
    np.testing.assert_allclose(eap_estimate(_stats([[3, 1]]), [np.full((1, 2), 0.5)])[0], [[0.7, 0.3]])
    np.testing.assert_allclose(eap_estimate(_stats([[0, 0]]), [np.full((1, 2), 0.5)])[0], [[0.5, 0.5]])
    np.testing.assert_allclose(
        eap_estimate(_stats([[9, 0, 0]]), [np.ones((1, 3))])[0], [[10 / 12, 1 / 12, 1 / 12]]
    )


def test_eap_rejects_nonpositive_alpha():
    with pytest.raises(ValueError):
        eap_estimate(_stats([[1, 1]]), [np.array([[0.0, 1.0]])])


@given(
    st.lists(st.lists(st.integers(0, 50), min_size=3, max_size=3), min_size=1, max_size=4),
    st.floats(1e-6, 1e3),
)
def test_eap_rows_are_distributions(counts, a):
    theta = eap_estimate(_stats(counts), [np.full((len(counts), 3), a)])[0]
    assert np.all(theta >= 0)
    np.testing.assert_allclose(theta.sum(axis=1), 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# log-likelihood


def test_log_likelihood_examples():
    assert log_likelihood(_stats([[0, 0]])) == 0
    assert log_likelihood(_stats([[4, 0]])) == 0
    expected = 3 * math.log2(0.75) + math.log2(0.25)
    assert log_likelihood(_stats([[3, 1]])) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(-3.2451, abs=1e-4)


@settings(max_examples=60)
@given(records_strategy, dag_strategy, st.integers(0, 2), st.integers(0, 2))
def test_adding_a_parent_never_lowers_log_likelihood(records, dag, child, parent):
    data = CategoricalDataset(VARS3, records or None)
    ll = log_likelihood(count_stats(data, dag))
    assert ll <= 1e-12
    if child == parent or parent in dag.parents[child]:
        return
    try:
        bigger = dag.with_parents(child, dag.parents[child] + (parent,))
    except DataFormatError:
        return  # would create a cycle
    assert log_likelihood(count_stats(data, bigger)) >= ll - 1e-9


def test_log_likelihood_zero_iff_deterministic():
    assert log_likelihood(_stats([[5, 0], [0, 2]], [[0, 0, 3]])) == 0
    assert log_likelihood(_stats([[5, 1]])) < 0


# ---------------------------------------------------------------------------
# file formats


def test_csv_round_trip():
    data = CategoricalDataset([Variable("a", 2), Variable("b", 3)], [[0, 2], [1, 1]])
    text = dataset_to_csv(data)
    assert text.splitlines()[:2] == ["a,b", "2,3"]
    back = read_csv(io.StringIO(text))
    assert back.variables == data.variables
    np.testing.assert_array_equal(back.records, data.records)


def test_csv_header_only_is_empty_dataset():
    data = read_csv(io.StringIO("a,b\n2,2\n"))
    assert data.n == 0 and data.num_vars == 2


@pytest.mark.parametrize(
    "text, match",
    [
        ("a,b\n2,2\n0,\n", "missing"),
        ("a,b\n2,x\n", "cardinalities"),
        ("a,b\n2,2\n0,2\n", "states"),
        ("a,b\n2,2\n0\n", "expected 2 fields"),
        ("a\n", "cardinalities row"),
    ],
)
def test_csv_errors(text, match):
    with pytest.raises(DataFormatError, match=match):
        read_csv(io.StringIO(text))


def test_structure_json_round_trip():
    variables = [Variable("a", 2), Variable("b", 3), Variable("c", 2)]
    dag = Dag.from_arcs(3, [(0, 1), (2, 1)])
    obj = dag_to_dict(dag, variables)
    assert obj["arcs"] == [["a", "b"], ["c", "b"]]
    back, vs = dag_from_dict(obj)
    assert back == dag and vs == variables


def test_structure_json_unknown_variable():
    with pytest.raises(DataFormatError, match="unknown variable"):
        dag_from_dict({"variables": [{"name": "a", "cardinality": 2}], "arcs": [["a", "z"]]})
