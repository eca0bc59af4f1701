import json

import pytest
from hypothesis import given, strategies as st

from coventropy import (
    CellMap,
    CellSpace,
    CoveringError,
    Cover,
    DynamicalModel,
    InfeasibleColouringError,
    StructuralError,
    cover_atoms,
    cycle_space,
    disjoint_union,
    dynamical_join,
    grid_space,
    join,
    minimal_coloured_refinement,
    minimal_subcover,
    model_from_json,
    model_to_json,
    path_space,
    pullback,
    relabel,
)
from oracles import brute_minimal_refinement, brute_minimal_subcover


def arc_cover(n):
    space = cycle_space(n)
    return space, Cover(space, tuple(frozenset({i, (i + 1) % n}) for i in range(n)))


# ---------------------------------------------------------------- structure


def test_space_rejects_self_adjacency():
    with pytest.raises(StructuralError):
        CellSpace(3, frozenset({(1, 1)}), dimension_d=1)


def test_dimension_zero_requires_empty_adjacency():
    with pytest.raises(StructuralError):
        CellSpace(3, frozenset({(0, 1)}), dimension_d=0)


def test_cover_must_cover():
    space = path_space(3)
    with pytest.raises(CoveringError) as exc:
        Cover(space, (frozenset({0, 1}),))
    assert exc.value.missing_cell == 2


def test_cover_dedups_and_sorts():
    space = CellSpace(3, frozenset(), dimension_d=0)
    cover = Cover(space, (frozenset({2}), frozenset({0, 1}), frozenset({2})))
    assert cover.elements == (frozenset({0, 1}), frozenset({2}))


def test_cellmap_requires_nonempty_images():
    space = path_space(2)
    with pytest.raises(StructuralError):
        CellMap(space, (frozenset({1}), frozenset()))


def test_invertible_flag_needs_bijection():
    space = path_space(2)
    with pytest.raises(StructuralError):
        CellMap(space, (frozenset({0}), frozenset({0})), invertible=True)


# ------------------------------------------------------------ cover algebra


def test_pullback_identity_is_identity():
    space, cover = arc_cover(5)
    assert pullback(cover, CellMap.identity(space)) == cover


def test_pullback_full_shift_depth2():
    # cells are the words 00,01,10,11 in lexicographic order; the shift
    # relation maps w to both extensions of w[1:]
    space = CellSpace(4, frozenset(), dimension_d=0)
    shift = CellMap(
        space,
        (
            frozenset({0, 1}),
            frozenset({2, 3}),
            frozenset({0, 1}),
            frozenset({2, 3}),
        ),
    )
    first_symbol = Cover(space, (frozenset({0, 1}), frozenset({2, 3})))
    pulled = pullback(first_symbol, shift)
    assert set(pulled.elements) == {frozenset({0, 2}), frozenset({1, 3})}


def test_pullback_cycle_rotation():
    space = cycle_space(4)
    rot = CellMap.from_function(space, lambda c: (c + 1) % 4, invertible=True)
    cover = Cover(space, (frozenset({0, 1}), frozenset({2, 3})))
    pulled = pullback(cover, rot)
    assert set(pulled.elements) == {frozenset({3, 0}), frozenset({1, 2})}


def test_join_idempotent_and_unit():
    space, cover = arc_cover(4)
    everything = Cover(space, (frozenset(range(4)),))
    assert join(cover, everything) == cover
    for el in cover.elements:
        assert el in join(cover, cover).elements


def test_join_frozen_example():
    space = CellSpace(3, frozenset(), dimension_d=0)
    a = Cover(space, (frozenset({0, 1}), frozenset({1, 2})))
    b = Cover(space, (frozenset({0}), frozenset({1, 2})))
    joined = join(a, b)
    assert set(joined.elements) == {frozenset({0}), frozenset({1}), frozenset({1, 2})}


def test_dynamical_join_n1_returns_cover():
    space, cover = arc_cover(5)
    rot = CellMap.from_function(space, lambda c: (c + 1) % 5, invertible=True)
    assert dynamical_join(cover, rot, 1) == cover


def test_dynamical_join_rotation_singletons():
    space = cycle_space(4)
    rot = CellMap.from_function(space, lambda c: (c + 1) % 4, invertible=True)
    cover = Cover(space, (frozenset({0, 1}), frozenset({2, 3})))
    joined = dynamical_join(cover, rot, 2)
    assert set(joined.elements) == {
        frozenset({0}),
        frozenset({1}),
        frozenset({2}),
        frozenset({3}),
    }


# --------------------------------------------------------------- subcovers


def test_partition_keeps_every_block():
    space = CellSpace(4, frozenset(), dimension_d=0)
    cover = Cover(space, (frozenset({0}), frozenset({1, 2}), frozenset({3})))
    result = minimal_subcover(cover)
    assert result.count == 3
    assert result.exact


def test_redundant_element_dropped():
    space = CellSpace(3, frozenset(), dimension_d=0)
    cover = Cover(space, (frozenset({0, 1, 2}), frozenset({0, 1})))
    result = minimal_subcover(cover)
    assert result.count == 1
    assert cover.elements[result.indices[0]] == frozenset({0, 1, 2})


def test_lexicographic_tie_break():
    space = CellSpace(4, frozenset(), dimension_d=0)
    # two optimal pairs; the index-lexicographic one must win
    cover = Cover(
        space,
        (
            frozenset({0, 1}),
            frozenset({2, 3}),
            frozenset({0, 2}),
            frozenset({1, 3}),
        ),
    )
    result = minimal_subcover(cover)
    # canonical element order is ({0,1}, {0,2}, {1,3}, {2,3}); both (0,3)
    # and (1,2) are optimal and the index-lexicographic pair wins
    assert result.indices == (0, 3)
    assert cover.elements[0] == frozenset({0, 1})
    assert cover.elements[3] == frozenset({2, 3})


def test_greedy_flagged_inexact():
    space, cover = arc_cover(5)
    result = minimal_subcover(cover, exact_threshold=0)
    assert not result.exact
    assert result.count >= 3


@st.composite
def small_covers(draw):
    n = draw(st.integers(2, 8))
    m = draw(st.integers(1, 6))
    elements = [
        frozenset(draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n)))
        for _ in range(m)
    ]
    covered = frozenset().union(*elements)
    missing = frozenset(range(n)) - covered
    if missing:
        elements.append(missing)
    space = CellSpace(n, frozenset(), dimension_d=0)
    return Cover(space, tuple(elements))


@given(small_covers())
def test_subcover_matches_bruteforce(cover):
    result = minimal_subcover(cover)
    count, indices = brute_minimal_subcover(cover.elements, cover.space.n_cells)
    assert result.exact
    assert result.count == count
    assert result.indices == indices


@given(small_covers())
def test_subcover_witness_covers(cover):
    result = minimal_subcover(cover)
    united = frozenset().union(*result.witness.elements)
    assert united == frozenset(range(cover.space.n_cells))


# ------------------------------------------------------------- refinements


def test_c5_arcs_need_one_extra_piece():
    space, cover = arc_cover(5)
    sub = minimal_subcover(cover)
    ref = minimal_coloured_refinement(cover)
    assert sub.count == 3
    assert ref.count == 4
    assert ref.exact


def test_path4_overlapping_cover():
    space = path_space(4)
    cover = Cover(space, (frozenset({0, 1}), frozenset({1, 2}), frozenset({2, 3})))
    sub = minimal_subcover(cover)
    ref = minimal_coloured_refinement(cover)
    assert sub.count == 2
    assert ref.count == 2
    assert ref.count <= (space.dimension_d + 1) * sub.count


def test_refinement_pieces_sit_in_parents():
    space, cover = arc_cover(6)
    ref = minimal_coloured_refinement(cover).refinement
    for piece, parent in zip(ref.pieces, ref.parent_of):
        assert piece <= cover.elements[parent]


def test_refinement_colour_classes_are_separated():
    space, cover = arc_cover(6)
    ref = minimal_coloured_refinement(cover).refinement
    for i, p in enumerate(ref.pieces):
        for j, q in enumerate(ref.pieces):
            if i < j and ref.colour_of[i] == ref.colour_of[j]:
                assert not (p & q)
                assert not space.sets_adjacent(p, q)


def test_triangle_singletons_infeasible():
    space = CellSpace(3, frozenset({(0, 1), (0, 2), (1, 2)}), dimension_d=1)
    cover = Cover(space, (frozenset({0}), frozenset({1}), frozenset({2})))
    with pytest.raises(InfeasibleColouringError) as exc:
        minimal_coloured_refinement(cover)
    assert exc.value.witness_cell in (0, 1, 2)


def test_triangle_whole_space_cover_is_fine():
    # the cover element may contain adjacent cells; constraints only bind
    # between distinct same-coloured pieces
    space = CellSpace(3, frozenset({(0, 1), (0, 2), (1, 2)}), dimension_d=1)
    cover = Cover(space, (frozenset({0, 1, 2}),))
    ref = minimal_coloured_refinement(cover)
    assert ref.count == 1


def test_dimension_zero_refinement_count_equals_subcover():
    space = CellSpace(5, frozenset(), dimension_d=0)
    cover = Cover(
        space,
        (frozenset({0, 1, 2}), frozenset({2, 3}), frozenset({3, 4}), frozenset({1, 2})),
    )
    assert minimal_coloured_refinement(cover).count == minimal_subcover(cover).count


@st.composite
def adjacency_covers(draw):
    kind = draw(st.sampled_from(["path", "grid", "cycle"]))
    if kind == "path":
        space = path_space(draw(st.integers(2, 7)))
    elif kind == "cycle":
        space = cycle_space(draw(st.integers(3, 7)))
    else:
        space = grid_space(draw(st.integers(2, 3)), draw(st.integers(2, 3)))
    n = space.n_cells
    m = draw(st.integers(1, 4))
    elements = [
        frozenset(draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n)))
        for _ in range(m)
    ]
    missing = frozenset(range(n)) - frozenset().union(*elements)
    if missing:
        elements.append(missing)
    return Cover(space, tuple(elements))


@given(adjacency_covers())
def test_refinement_matches_bruteforce_on_small_instances(cover):
    atoms = cover_atoms(cover)
    colours = cover.space.dimension_d + 1
    oracle = brute_minimal_refinement(
        cover.elements, cover.space.n_cells, cover.space.adjacency, colours
    )
    if len(atoms) > 6:
        return
    try:
        result = minimal_coloured_refinement(cover)
    except InfeasibleColouringError:
        assert oracle is None
        return
    assert result.exact
    assert oracle == result.count


@given(adjacency_covers())
def test_sandwich_inequality(cover):
    sub = minimal_subcover(cover)
    colours = cover.space.dimension_d + 1
    try:
        ref = minimal_coloured_refinement(cover)
    except InfeasibleColouringError:
        return
    if sub.exact and ref.exact:
        assert sub.count <= ref.count <= colours * sub.count


# ------------------------------------------------- relabelling and unions


def test_relabel_identity():
    space, cover = arc_cover(5)
    assert relabel(cover, tuple(range(5))) == cover


def test_relabel_preserves_counts():
    space, cover = arc_cover(6)
    perm = (3, 5, 1, 0, 4, 2)
    permuted = relabel(cover, perm)
    assert minimal_subcover(permuted).count == minimal_subcover(cover).count
    assert minimal_coloured_refinement(permuted).count == minimal_coloured_refinement(cover).count


def test_relabel_rejects_non_bijection():
    space, cover = arc_cover(4)
    with pytest.raises(StructuralError):
        relabel(cover, (0, 0, 1, 2))


def test_disjoint_union_counts_add():
    sa, ca = arc_cover(5)
    rot_a = CellMap.from_function(sa, lambda c: (c + 1) % 5, invertible=True)
    sb = path_space(3)
    cb = Cover(sb, (frozenset({0, 1}), frozenset({2})))
    model_a = DynamicalModel(sa, ca, rot_a)
    model_b = DynamicalModel(sb, cb, CellMap.identity(sb))
    union = disjoint_union(model_a, model_b)
    na = minimal_subcover(ca).count
    nb = minimal_subcover(cb).count
    assert minimal_subcover(union.cover).count == na + nb
    assert union.space.dimension_d == max(sa.dimension_d, sb.dimension_d)


# ------------------------------------------------------------ persistence


def test_model_json_roundtrip():
    space, cover = arc_cover(5)
    rot = CellMap.from_function(space, lambda c: (c + 1) % 5, invertible=True)
    model = DynamicalModel(space, cover, rot)
    doc = model_to_json(model)
    back = model_from_json(json.loads(json.dumps(doc)))
    assert back.space == model.space
    assert back.cover == model.cover
    assert back.dynamics.images == model.dynamics.images
    assert back.dynamics.invertible


def test_model_json_rejects_bad_cell():
    space, cover = arc_cover(4)
    model = DynamicalModel(space, cover, CellMap.identity(space))
    doc = model_to_json(model)
    doc["cover"][0] = [99]
    with pytest.raises(StructuralError):
        model_from_json(doc)
