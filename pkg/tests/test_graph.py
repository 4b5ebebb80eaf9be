import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from csmalab.graph import (
    CapExceededError,
    InterferenceGraph,
    chromatic_number,
    complete_graph,
    cycle_graph,
    empty_graph,
    enumerate_independent_sets,
    format_edge_list,
    parse_edge_list,
    path_graph,
    petersen_graph,
    random_layout,
    read_edge_list,
    star_graph,
    two_hop_conflict_graph,
    write_edge_list,
)


@st.composite
def graphs(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return InterferenceGraph.from_edges(n, edges)


def brute_force_chromatic(g):
    # try every assignment with k colors, smallest k first
    for k in range(1, g.n + 1):
        for col in itertools.product(range(k), repeat=g.n):
            if all(col[i] != col[j] for i, j in g.edges):
                return k


def brute_force_independent(g):
    return sorted(rho for rho in itertools.product((0, 1), repeat=g.n)
                  if all(not (rho[i] and rho[j]) for i, j in g.edges))


def test_rejects_self_loops_and_bad_indices():
    with pytest.raises(ValueError):
        InterferenceGraph.from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        InterferenceGraph.from_edges(3, [(0, 3)])


def test_edges_are_symmetric():
    g = InterferenceGraph.from_edges(3, [(2, 0), (0, 2), (1, 2)])
    assert g.sorted_edges() == [(0, 2), (1, 2)]
    assert g.neighbors(2) == [0, 1]


def test_path_of_three():
    fam = enumerate_independent_sets(path_graph(3))
    got = {tuple(r) for r in fam.sets.tolist()}
    assert got == {(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, 1)}
    assert len(fam) == 5


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_complete_graph_has_singletons_only(n):
    assert len(enumerate_independent_sets(complete_graph(n))) == n + 1


@pytest.mark.parametrize("n", [1, 3, 6])
def test_empty_graph_has_all_subsets(n):
    assert len(enumerate_independent_sets(empty_graph(n))) == 2 ** n


def test_order_is_lexicographic_with_empty_first():
    fam = enumerate_independent_sets(cycle_graph(5))
    assert fam.sets[0].sum() == 0
    assert list(fam.codes) == sorted(fam.codes)
    assert fam.index(fam.sets[3]) == 3
    for i in range(5):
        assert fam.sets[fam.singleton(i)].sum() == 1


def test_index_rejects_dependent_set():
    fam = enumerate_independent_sets(complete_graph(3))
    with pytest.raises(KeyError):
        fam.index([1, 1, 0])


def test_cap_exceeded():
    with pytest.raises(CapExceededError):
        enumerate_independent_sets(empty_graph(10), cap=100)


@given(graphs())
def test_enumeration_matches_brute_force(g):
    fam = enumerate_independent_sets(g)
    assert [tuple(r) for r in fam.sets.tolist()] == brute_force_independent(g)
    for i, j in g.edges:
        assert not np.any(fam.sets[:, i] & fam.sets[:, j])


@given(graphs())
def test_enumeration_is_deterministic(g):
    a, b = enumerate_independent_sets(g), enumerate_independent_sets(g)
    assert a.sets.tobytes() == b.sets.tobytes()


@pytest.mark.parametrize("g, chi", [
    (complete_graph(5), 5),
    (path_graph(3), 2),
    (empty_graph(4), 1),
    (cycle_graph(5), 3),
    (cycle_graph(6), 2),
    (star_graph(6), 2),
])
def test_chromatic_known(g, chi):
    assert chromatic_number(g) == chi


def test_petersen_against_exhaustive_oracle():
    g = petersen_graph()
    assert len(g.edges) == 15
    assert chromatic_number(g) == brute_force_chromatic(g) == 3


@given(graphs(max_n=7))
def test_chromatic_matches_exhaustive(g):
    chi = chromatic_number(g)
    assert chi == brute_force_chromatic(g)
    assert (chi == 1) == (len(g.edges) == 0)


def test_chromatic_cap():
    with pytest.raises(CapExceededError):
        chromatic_number(complete_graph(40))


def test_two_hop_shared_endpoint():
    nodes = [(0.0, 0.0), (100.0, 0.0), (200.0, 0.0)]
    g, links = two_hop_conflict_graph(nodes, 150.0)
    assert links == [(0, 1), (1, 2)]
    assert g.sorted_edges() == [(0, 1)]


def test_two_hop_far_pairs_do_not_conflict():
    nodes = [(0.0, 0.0), (10.0, 0.0), (1000.0, 0.0), (1010.0, 0.0)]
    g, links = two_hop_conflict_graph(nodes, 50.0)
    assert len(links) == 2 and not g.edges


def test_two_hop_adjacent_endpoints_conflict():
    # a-b and c-d with b within range of c: links are within two hops
    nodes = [(0.0, 0.0), (100.0, 0.0), (200.0, 0.0), (300.0, 0.0)]
    g, links = two_hop_conflict_graph(nodes, 100.0)
    assert links == [(0, 1), (1, 2), (2, 3)]
    assert (0, 2) in g.edges


def test_two_hop_no_links():
    g, links = two_hop_conflict_graph([(0.0, 0.0), (900.0, 0.0)], 10.0)
    assert g is None and links == []


def test_random_layout_seeded():
    a, b = random_layout(20, 800.0, 4), random_layout(20, 800.0, 4)
    assert np.array_equal(a, b)
    assert a.shape == (20, 2) and a.min() >= 0 and a.max() <= 800


def test_edge_list_roundtrip(tmp_path):
    g = petersen_graph()
    p = tmp_path / "g.txt"
    write_edge_list(g, p)
    assert read_edge_list(p) == g
    assert parse_edge_list("# comment\nn 3\n0 1  # edge\n\n1 2\n") == path_graph(3)
    assert format_edge_list(path_graph(3)) == "n 3\n0 1\n1 2\n"


@pytest.mark.parametrize("text", ["0 1\n", "n 3\n0\n", "n 3\nn 4\n", ""])
def test_edge_list_errors(text):
    with pytest.raises(ValueError):
        parse_edge_list(text)
