import math

import pytest

try:
    from hypothesis import given, settings, strategies as st
except ModuleNotFoundError:  # pragma: no cover
    pytest.skip("hypothesis not installed", allow_module_level=True)

from services.brooms import from_out_regular, validate_broom, validate_broom_digraph
from services.digraph import build, complete, from_arcs
from services.errors import InvalidInput, PreconditionViolation, StrictConstantError
from services.generators import gen_broom, gen_broom_digraph
from services.lll_subsample import SubsampleParams
from services.models import CleanUpMode
from services.restructure import (
    CleanUpParams, check_strict_cleanup, clean_up, compute_type, compute_types, extract_broom, is_typed,
    level_labels, make_typed, max_extractable_degree, monochromatic_broom, monochromatic_prune,
)


def binary_tree():
    return build(7, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)])


@pytest.fixture
def mixed_broom_digraph(subdivided_broom_arcs):
    """Root 0 owns the subdivided broom; its leaves 3,4,6,7 own out-stars back into R"""
    roots = [0, 3, 4, 6, 7]
    arcs = list(subdivided_broom_arcs)
    certificate = {0: from_arcs(8, subdivided_broom_arcs)}
    for r in roots[1:]:
        targets = [w for w in roots if w != r][:2]
        arcs += [(r, w) for w in targets]
        certificate[r] = from_arcs(8, [(r, w) for w in targets])
    return validate_broom_digraph(from_arcs(8, arcs), roots, certificate, 1, 2).value


@st.composite
def arborescences(draw, max_height=3, max_children=4):
    """Random out-arborescence rooted at 0 with every leaf at depth <= max_height"""
    arcs = []
    frontier = [(0, 0)]
    next_id = 1
    while frontier:
        v, depth = frontier.pop(0)
        if depth == max_height or (depth > 0 and draw(st.booleans())):
            continue
        for _ in range(draw(st.integers(min_value=1, max_value=max_children))):
            arcs.append((v, next_id))
            frontier.append((next_id, depth + 1))
            next_id += 1
    return from_arcs(next_id, arcs, vertices=[0])


# ==================== extract_broom ====================

def test_level_labels_of_binary_tree():
    labels = level_labels(binary_tree(), 0, 2)
    assert labels.phi == {0: 1, 1: 1, 2: 1, 3: 0, 4: 0, 5: 0, 6: 0}
    assert labels.selector == {0: 1, 1: 0, 2: 0}


def test_extract_from_binary_tree():
    broom = extract_broom(binary_tree(), 0, 2, 2)
    assert broom.tree.arcs == frozenset({(0, 1), (1, 3)})
    assert broom.ell == 2
    assert (broom.k, broom.d) == (1, 1)


def test_extract_from_star_keeps_smallest_leaves():
    broom = extract_broom(build(4, [(0, 1), (0, 2), (0, 3)]), 0, 2, 3)
    assert broom.tree.arcs == frozenset({(0, 1), (0, 2)})
    assert broom.ell == 1


def test_extract_needs_k_at_least_two():
    with pytest.raises(InvalidInput):
        extract_broom(binary_tree(), 0, 1, 2)


def test_extract_rejects_non_arborescence():
    with pytest.raises(InvalidInput):
        extract_broom(build(3, [(0, 2), (1, 2)]), 0, 2, 1)


def test_extract_root_degree_precondition():
    with pytest.raises(PreconditionViolation) as err:
        extract_broom(binary_tree(), 0, 2, 3)
    assert err.value.witness == [0]


def test_extract_low_degree_near_leaf_reports_path():
    T = build(5, [(0, 1), (0, 2), (0, 3), (1, 4)])
    with pytest.raises(PreconditionViolation) as err:
        extract_broom(T, 0, 2, 3)
    assert err.value.witness == [0, 1, 4]


def test_max_extractable_degree():
    assert max_extractable_degree(binary_tree(), 0, 2) == 2


def _check_extraction(T, k):
    d = max_extractable_degree(T, 0, k)
    broom = extract_broom(T, 0, k, d)
    assert broom.tree.arcs <= T.arcs
    assert broom.leaves <= T.sinks()
    assert (broom.k, broom.d) == (k - 1, math.ceil(d / k))
    assert validate_broom(broom.tree, 0, k - 1, broom.d).valid


@settings(max_examples=80, deadline=None)
@given(arborescences(), st.integers(min_value=2, max_value=3))
def test_extracted_broom_sits_inside_the_tree(T, k):
    _check_extraction(T, k)


@pytest.mark.slow
@settings(max_examples=500, deadline=None)
@given(arborescences(max_height=5, max_children=3), st.integers(min_value=2, max_value=4))
def test_extraction_at_scale(T, k):
    _check_extraction(T, k)


# ==================== monochromatic pruning ====================

def test_majority_color_wins():
    star = build(5, [(0, 1), (0, 2), (0, 3), (0, 4)])
    pruned = monochromatic_prune(star, 0, {1: 0, 2: 0, 3: 1, 4: 1}, 2)
    assert pruned.arcs == frozenset({(0, 1), (0, 2)})


def test_coloring_must_cover_leaves():
    star = build(3, [(0, 1), (0, 2)])
    with pytest.raises(InvalidInput):
        monochromatic_prune(star, 0, {1: 0}, 2)


def test_color_out_of_range():
    star = build(3, [(0, 1), (0, 2)])
    with pytest.raises(InvalidInput):
        monochromatic_prune(star, 0, {1: 0, 2: 2}, 2)


def test_single_color_keeps_everything():
    broom = validate_broom(binary_tree(), 0, 2, 2).value
    kept = monochromatic_broom(broom, {v: 0 for v in broom.leaves}, 1)
    assert kept.tree == broom.tree


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2), st.integers(1, 4), st.integers(1, 3), st.integers(0, 10 ** 6), st.data())
def test_monochromatic_broom_has_one_leaf_color(k, d, C, seed, data):
    ell = data.draw(st.integers(min_value=1, max_value=k + 1))
    broom = gen_broom(k, d, ell, seed=seed, max_subdivision=1)
    coloring = {leaf: data.draw(st.integers(0, C - 1)) for leaf in sorted(broom.leaves)}
    kept = monochromatic_broom(broom, coloring, C)
    assert kept.d == math.ceil(d / C)
    assert kept.tree.arcs <= broom.tree.arcs
    assert len({coloring[leaf] for leaf in kept.leaves}) == 1


# ==================== types ====================

def test_types_on_complete_digraph(k3_brooms):
    assert compute_type(k3_brooms, 0, 2) == (1, 1)
    assert is_typed(k3_brooms, 2)


def test_type_of_length_zero_is_empty(k3_brooms):
    assert compute_type(k3_brooms, 1, 0) == ()


def test_types_in_mixed_broom_digraph(mixed_broom_digraph):
    B = mixed_broom_digraph
    assert compute_type(B, 1, 2) == (0, 1)
    assert compute_type(B, 5, 1) == (1,)
    assert compute_type(B, 0, 1) == (0,)
    assert compute_type(B, 0, 2) is None
    assert not is_typed(B, 2)


def test_negative_type_length_rejected(k3_brooms):
    with pytest.raises(InvalidInput):
        compute_type(k3_brooms, 0, -1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 2), st.integers(1, 3), st.integers(0, 10 ** 6), st.integers(0, 3))
def test_batch_types_match_walk_sets(k, d, seed, t):
    B = gen_broom_digraph(k, d, d ** (k + 1) + 1, seed=seed, max_subdivision=1)
    types = compute_types(B, t)
    for v in B.digraph.vertices():
        assert types[v] == compute_type(B, v, t)


def test_make_typed_complete_digraph(k3_brooms):
    typed = make_typed(k3_brooms, 2)
    assert typed.d == 1
    assert typed.roots == k3_brooms.roots
    assert is_typed(typed, 2)


def test_make_typed_rejects_long_types(k3_brooms):
    with pytest.raises(InvalidInput):
        make_typed(k3_brooms, 3)


def test_make_typed_zero_is_identity_degree(mixed_broom_digraph):
    assert make_typed(mixed_broom_digraph, 0).d == mixed_broom_digraph.d


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 2), st.integers(2, 4), st.integers(0, 10 ** 6), st.data())
def test_make_typed_generated(k, d, seed, data):
    B = gen_broom_digraph(k, d, d ** (k + 1) + 1, seed=seed, max_subdivision=1)
    t = data.draw(st.integers(min_value=0, max_value=k))
    typed = make_typed(B, t)
    assert typed.roots == B.roots
    assert typed.d == math.ceil(d / 2 ** (t * (t - 1) // 2))
    assert typed.digraph.arcs <= B.digraph.arcs
    assert is_typed(typed, t)


# ==================== clean-up ====================

def _k6_brooms():
    return from_out_regular(complete(6), 2)


def test_parametric_clean_up_on_complete_digraph():
    params = CleanUpParams(SubsampleParams(1.0, 1, 2, 5), 2)
    result = clean_up(_k6_brooms(), CleanUpMode.PARAMETRIC, params)
    B = result.broom_digraph
    assert B.d == 2
    assert B.roots == frozenset(range(6))
    assert set(result.root_in_degrees.values()) == {5}
    assert is_typed(B, 2)
    assert result.to_dict()["summary"]["d"] == 2


def test_clean_up_target_above_typed_degree():
    params = CleanUpParams(SubsampleParams(1.0, 1, 2, 5), 4)
    with pytest.raises(InvalidInput):
        clean_up(_k6_brooms(), CleanUpMode.PARAMETRIC, params)


def test_parametric_clean_up_needs_params():
    with pytest.raises(InvalidInput):
        clean_up(_k6_brooms(), CleanUpMode.PARAMETRIC)


def test_strict_clean_up_refuses_small_degree():
    with pytest.raises(StrictConstantError) as err:
        clean_up(_k6_brooms(), CleanUpMode.STRICT)
    assert err.value.required == "10^104"


def test_strict_threshold_grows_with_k():
    with pytest.raises(StrictConstantError):
        check_strict_cleanup(10 ** 12, 1)
    check_strict_cleanup(10 ** 13, 1)


def test_target_degree_must_be_positive():
    with pytest.raises(InvalidInput):
        CleanUpParams(SubsampleParams(1.0, 1, 2, 5), 0)
