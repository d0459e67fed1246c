import itertools

import networkx as nx
import pytest

try:
    from hypothesis import given, settings, strategies as st
except ModuleNotFoundError:  # pragma: no cover
    pytest.skip("hypothesis not installed", allow_module_level=True)

from services.digraph import (
    Digraph, Walk, bfs_distances, build, complete, cycle, delete, from_arcs, induced, reachable,
    shortest_path_to_set, walks_of_length,
)
from services.errors import InvalidInput


@st.composite
def digraphs(draw, max_n=8):
    n = draw(st.integers(min_value=1, max_value=max_n))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    arcs = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    return build(n, arcs)


# ==================== build ====================

def test_build_cycle_has_unit_out_degrees():
    D = build(3, [(0, 1), (1, 2), (2, 0)])
    assert D.size == 3
    assert all(D.out_degree(v) == 1 for v in D.vertices())


def test_build_single_vertex():
    D = build(1, [])
    assert D.order == 1
    assert D.min_out_degree() == 0


def test_build_drops_duplicate_arcs():
    D = build(3, [(0, 1), (0, 1), (1, 2)])
    assert D.size == 2


def test_build_rejects_self_loop():
    with pytest.raises(InvalidInput) as err:
        build(3, [(0, 1), (2, 2)])
    assert err.value.details["arc"] == [2, 2]


def test_build_rejects_out_of_range_vertex():
    with pytest.raises(InvalidInput):
        build(3, [(0, 3)])


def test_adjacency_is_sorted():
    D = build(5, [(0, 4), (0, 2), (0, 3), (0, 1)])
    assert D.out_neighbors(0) == (1, 2, 3, 4)


@given(digraphs())
def test_degree_sums_match_arc_count(D):
    assert sum(D.out_degree(v) for v in D.vertices()) == D.size
    assert sum(D.in_degree(v) for v in D.vertices()) == D.size
    for u, v in D.arcs:
        assert D.out_neighbors(u).count(v) == 1
        assert D.in_neighbors(v).count(u) == 1


# ==================== delete / induced ====================

def test_delete_vertex_keeps_ids_stable(c3):
    D = delete(c3, [1])
    assert D.arcs == frozenset({(2, 0)})
    assert not D.is_alive(1)
    assert D.n == 3


def test_delete_arc(c3):
    assert delete(c3, [(0, 1)]).size == 2


def test_delete_nothing_is_identity(c3):
    assert delete(c3, []) == c3


def test_delete_absent_elements_is_noop(c3):
    assert delete(c3, [(1, 0)]) == c3


@given(digraphs(), st.data())
def test_degrees_after_delete_match_recount(D, data):
    victims = data.draw(st.lists(st.sampled_from(D.vertices()), unique=True))
    E = delete(D, victims)
    assert E.is_subdigraph_of(D)
    fresh = Digraph(E.n, E.arcs, E.alive)
    for v in E.vertices():
        assert E.out_degree(v) == fresh.out_degree(v)
        assert E.in_degree(v) == fresh.in_degree(v)


def test_induced_on_pair_of_complete(k3):
    assert induced(k3, {0, 1}).arcs == frozenset({(0, 1), (1, 0)})


def test_induced_on_all_is_identity(k3):
    assert induced(k3, k3.vertices()) == k3


def test_induced_on_cycle(c3):
    assert induced(c3, {0, 2}).arcs == frozenset({(2, 0)})


@given(digraphs(), st.data())
def test_induced_is_idempotent(D, data):
    X = data.draw(st.sets(st.sampled_from(D.vertices())))
    once = induced(D, X)
    assert once.is_subdigraph_of(D)
    assert induced(once, X) == once


# ==================== paths and walks ====================

def test_shortest_path_on_cycle(c3):
    assert shortest_path_to_set(c3, 0, {2}).vertices == (0, 1, 2)


def test_shortest_path_from_inside_set(c3):
    walk = shortest_path_to_set(c3, 1, {1, 2})
    assert walk.vertices == (1,)
    assert walk.length == 0


def test_shortest_path_unreachable():
    D = build(3, [(0, 1)])
    assert shortest_path_to_set(D, 1, {0}) is None


def test_shortest_path_prefers_smaller_second_vertex():
    # 0 -> 2 -> 3 and 0 -> 1 -> 3
    D = build(4, [(0, 2), (2, 3), (0, 1), (1, 3)])
    assert shortest_path_to_set(D, 0, {3}).vertices == (0, 1, 3)


def _all_paths(D, v, S):
    found = []

    def dfs(path):
        if path[-1] in S:
            found.append(tuple(path))
            return
        for y in D.out_neighbors(path[-1]):
            if y not in path:
                dfs(path + [y])

    dfs([v])
    return found


@settings(max_examples=60)
@given(digraphs(max_n=7), st.data())
def test_shortest_path_matches_exhaustive_search(D, data):
    v = data.draw(st.sampled_from(D.vertices()))
    S = data.draw(st.sets(st.sampled_from(D.vertices()), min_size=1))
    walk = shortest_path_to_set(D, v, S)
    paths = _all_paths(D, v, S)
    if not paths:
        assert walk is None
        return
    shortest = min(len(p) for p in paths)
    assert walk.is_path
    assert len(walk.vertices) == shortest
    assert walk.end in S
    assert all(D.has_arc(a, b) for a, b in walk.arcs())
    # tie-break: lexicographically smallest by BFS discovery equals smallest second vertex
    if walk.length >= 1:
        seconds = {p[1] for p in paths if len(p) == shortest}
        assert walk.vertices[1] == min(seconds)


def test_walks_around_cycle(c3):
    assert walks_of_length(c3, 0, 3) == frozenset({0})


def test_walks_of_length_zero(k3):
    assert walks_of_length(k3, 2, 0) == frozenset({2})


def test_walks_of_length_two_in_complete(k3):
    assert walks_of_length(k3, 0, 2) == frozenset({0, 1, 2})


def test_walks_of_negative_length_rejected(k3):
    with pytest.raises(InvalidInput):
        walks_of_length(k3, 0, -1)


@given(digraphs(max_n=6), st.data())
def test_walk_sets_grow_by_out_neighborhoods(D, data):
    v = data.draw(st.sampled_from(D.vertices()))
    i = data.draw(st.integers(min_value=0, max_value=4))
    step = walks_of_length(D, v, i)
    assert walks_of_length(D, v, i + 1) == frozenset(y for x in step for y in D.out_neighbors(x))


def test_walk_sets_against_enumeration(k3):
    for v, i in itertools.product(range(3), range(4)):
        ends = {walk[-1] for walk in itertools.product(range(3), repeat=i + 1)
                if walk[0] == v and all(a != b for a, b in zip(walk, walk[1:]))}
        assert walks_of_length(k3, v, i) == frozenset(ends)


# ==================== helpers ====================

def test_from_arcs_live_set_is_endpoints():
    D = from_arcs(10, [(3, 4)], vertices=[7])
    assert D.vertices() == (3, 4, 7)
    assert D.out_degree(9) == 0


def test_bfs_distances_reverse():
    D = build(4, [(0, 1), (1, 2), (3, 2)])
    assert bfs_distances(D, [2], reverse=True) == {2: 0, 1: 1, 3: 1, 0: 2}


def test_bfs_distances_limit():
    D = build(4, [(0, 1), (1, 2), (2, 3)])
    assert bfs_distances(D, [0], limit=2) == {0: 0, 1: 1, 2: 2}


def test_reachable_respects_blocked():
    D = build(4, [(0, 1), (1, 2), (0, 3)])
    assert reachable(D, 0, blocked={1}) == frozenset({0, 3})


def test_complete_and_cycle_shapes():
    assert complete(4).size == 12
    assert cycle(5).min_in_degree() == 1


@given(digraphs())
def test_networkx_view_agrees(D):
    graph = D.to_networkx()
    assert set(graph.edges()) == set(D.arcs)
    assert set(graph.nodes()) == set(D.vertices())
    assert nx.is_directed(graph)


def test_walk_properties():
    walk = Walk((0, 1, 0))
    assert walk.length == 2
    assert not walk.is_path
    assert walk.arcs() == [(0, 1), (1, 0)]
