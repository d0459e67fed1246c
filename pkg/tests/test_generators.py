import pytest

try:
    from hypothesis import given, settings, strategies as st
except ModuleNotFoundError:  # pragma: no cover
    pytest.skip("hypothesis not installed", allow_module_level=True)

from services.brooms import BroomDigraph, validate_broom, validate_broom_digraph
from services.digraph import Digraph, build
from services.errors import InvalidInput
from services.generators import (
    broom_leaf_count, canonical_form, enumerate_grounded_trees, enumerate_oriented_trees, favorable_degree,
    favorable_schedule, gen_broom, gen_broom_digraph, gen_favorable, gen_grounded_tree, gen_out_regular, generate,
    uniform_schedule,
)
from services.grounded import brute_grounded, grounded_profile, is_oriented_tree


# ==================== out-regular ====================

@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.data())
def test_out_regular_degrees(n, data):
    d = data.draw(st.integers(min_value=0, max_value=n - 1))
    D = gen_out_regular(n, d, seed=data.draw(st.integers(0, 1000)))
    assert all(D.out_degree(v) == d for v in D.vertices())
    assert all(u != v for u, v in D.arcs)


def test_out_regular_is_seeded():
    assert gen_out_regular(20, 4, seed=3) == gen_out_regular(20, 4, seed=3)
    assert gen_out_regular(20, 4, seed=3) != gen_out_regular(20, 4, seed=4)


def test_out_regular_degree_too_large():
    with pytest.raises(InvalidInput):
        gen_out_regular(3, 3)


# ==================== brooms ====================

def test_subdivided_broom_layout():
    broom = gen_broom(1, 2, 2, subdivisions=[0, 1])
    assert broom.tree.arcs == frozenset({(0, 1), (1, 2), (1, 3), (0, 4), (4, 5), (5, 6), (5, 7)})
    assert broom.subdivision_vertices == frozenset({4})
    assert broom.ell == 2


def test_subdivisions_only_at_top_height():
    with pytest.raises(InvalidInput):
        gen_broom(2, 2, 1, subdivisions=[1, 0])


def test_subdivision_count_must_match_degree():
    with pytest.raises(InvalidInput):
        gen_broom(1, 2, 2, subdivisions=[1])


def test_ell_out_of_range():
    with pytest.raises(InvalidInput):
        gen_broom(1, 2, 3)


def test_leaf_counts():
    assert broom_leaf_count(2, 3, 1) == 3
    assert broom_leaf_count(2, 3, 3) == 27
    assert broom_leaf_count(1, 2, 2) == 4


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2), st.integers(1, 3), st.integers(0, 10 ** 6))
def test_generated_broom_digraphs_validate(k, d, seed):
    n_roots = d ** (k + 1) + 1
    B = gen_broom_digraph(k, d, n_roots, seed=seed)
    assert B.roots == frozenset(range(n_roots))
    report = validate_broom_digraph(B.digraph, B.roots, {r: b.tree for r, b in B.brooms.items()}, k, d)
    assert report.valid
    assert all(validate_broom(b.tree, r, k, d).valid for r, b in B.brooms.items())


def test_broom_digraph_is_seeded():
    first = gen_broom_digraph(2, 2, 9, seed=5)
    again = gen_broom_digraph(2, 2, 9, seed=5)
    assert first.digraph == again.digraph
    assert first.certificate() == again.certificate()


def test_broom_digraph_mix_respected():
    B = gen_broom_digraph(2, 2, 9, mix=[1], seed=2)
    assert {b.ell for b in B.brooms.values()} == {1}


def test_broom_digraph_infeasible_mix():
    with pytest.raises(InvalidInput):
        gen_broom_digraph(2, 3, 3, mix=[2])


def test_broom_digraph_needs_two_roots():
    with pytest.raises(InvalidInput):
        gen_broom_digraph(1, 1, 1)


# ==================== trees ====================

@pytest.mark.parametrize("order, count", [(1, 1), (2, 1), (3, 3), (4, 8), (5, 27), (6, 91), (7, 350)])
def test_oriented_tree_counts(order, count):
    assert len(enumerate_oriented_trees(order)) == count


@pytest.mark.parametrize("order", range(1, 8))
def test_grounded_enumeration_matches_brute_filter(order):
    expected = [T for T in enumerate_oriented_trees(order) if brute_grounded(T)]
    assert [canonical_form(T) for T in enumerate_grounded_trees(order)] == [canonical_form(T) for T in expected]


def test_small_grounded_counts():
    assert len(enumerate_grounded_trees(3)) == 3
    assert len(enumerate_grounded_trees(4)) == 8
    assert len(enumerate_grounded_trees(5)) < 27


def test_max_grounded_subset():
    trees = enumerate_grounded_trees(5, max_grounded_only=True)
    assert trees
    assert all(grounded_profile(T).max_grounded for T in trees)


def test_enumeration_guard():
    with pytest.raises(InvalidInput):
        enumerate_oriented_trees(8)
    with pytest.raises(InvalidInput):
        enumerate_oriented_trees(0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.integers(0, 10 ** 6), st.booleans())
def test_sampled_trees_are_grounded(order, seed, max_only):
    T = gen_grounded_tree(order, seed=seed, max_grounded_only=max_only)
    assert is_oriented_tree(T)
    profile = grounded_profile(T)
    assert profile.max_grounded if max_only else profile.grounded


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10 ** 6), st.randoms(use_true_random=False))
def test_canonical_form_ignores_labels(order, seed, rnd):
    T = gen_grounded_tree(order, seed=seed)
    labels = list(range(order))
    rnd.shuffle(labels)
    relabeled = Digraph(order, [(labels[u], labels[v]) for u, v in T.arcs])
    assert canonical_form(relabeled) == canonical_form(T)


def test_canonical_form_tells_directions_apart(path3, sink_tree, out_star):
    assert len({canonical_form(path3), canonical_form(sink_tree), canonical_form(out_star)}) == 3


def test_canonical_form_rejects_cycles(c3):
    with pytest.raises(InvalidInput):
        canonical_form(c3)


# ==================== favorable instances ====================

def test_favorable_degrees():
    assert [favorable_degree(order) for order in (1, 2, 3)] == [2, 2, 8]


def test_favorable_schedule_halves_twice():
    schedule, degrees = favorable_schedule(8, 2)
    assert degrees == [8, 2, 1]
    assert [p.subsample.broom_target for p in schedule] == [4, 1]
    assert [p.target_degree for p in schedule] == [2, 1]
    assert all(p.subsample.p_keep == 1.0 for p in schedule)


def test_favorable_instance_shape():
    B, schedule, manifest = gen_favorable(build(2, [(0, 1)]))
    assert isinstance(B, BroomDigraph)
    assert (B.k, B.d) == (2, 2)
    assert len(B.roots) == 5
    assert all(B.digraph.in_degree(r) == 4 for r in B.roots)
    assert manifest["levels"] == 1
    assert manifest["degrees"] == [2, 1]
    assert len(schedule) == 1


def test_favorable_seed_reaches_schedule():
    _, schedule, _ = gen_favorable(build(3, [(0, 2), (1, 2)]), seed=20)
    assert [p.subsample.rng_seed for p in schedule] == [20, 21]
    _, default, _ = gen_favorable(build(3, [(0, 2), (1, 2)]))
    assert [p.subsample.rng_seed for p in default] == [0, 1]


def test_favorable_guards():
    with pytest.raises(InvalidInput):
        gen_favorable(build(4, [(0, 1), (1, 2), (2, 3)]))
    with pytest.raises(InvalidInput):
        gen_favorable(build(4, [(0, 2), (1, 2), (2, 3)]))


def test_uniform_schedule_seeds():
    schedule = uniform_schedule(3, 0.5, 1, 2, 2, 1, seed=10)
    assert [p.subsample.rng_seed for p in schedule] == [10, 11, 12]
    assert all(p.target_degree == 1 for p in schedule)


# ==================== dispatch ====================

def test_generate_dispatch():
    D = generate("out_regular", {"n": 6, "d": 2, "seed": 1})
    assert D == gen_out_regular(6, 2, seed=1)
    broom = generate("broom", {"k": 1, "d": 2, "ell": 2, "subdivisions": [0, 1]})
    assert broom.subdivision_vertices == frozenset({4})
    B, schedule, manifest = generate("favorable", {"tree": build(2, [(0, 1)])})
    assert manifest["k"] == 2


def test_generate_unknown_model():
    with pytest.raises(InvalidInput):
        generate("tournament", {})


def test_generate_missing_parameter():
    with pytest.raises(InvalidInput) as err:
        generate("out_regular", {"n": 6})
    assert "'d'" in err.value.message
