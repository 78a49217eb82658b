from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import _model as M
from _fixtures import pair, tetrahedron_example, triple
from _laws import check_seed
from blowup.complex import (AmbiguousCopy, Complex, ComplexError, DensityUndefined, Ground, GroundMismatch,
                            IndexComplex, MarkedComplex, NotSubcomplex, absolute_density, compose, empty_complex,
                            from_edges, intersection, make_complete, neighborhood, preplus, relative_density,
                            restrict, star_set, union, up_set, validate)

seeds = st.integers(0, 2**32 - 1)


def two_copies_of_pair():
    """Base {0, 1} with the pair {0, 1} present twice over the same singletons."""
    subs = [(0,), (1,), (), (0, 1), (0, 1)]
    below = [{(0,): 0, (): 2}, {(1,): 1, (): 2}, {(): 2},
             {(0,): 0, (1,): 1, (): 2, (0, 1): 3}, {(0,): 0, (1,): 1, (): 2, (0, 1): 4}]
    return IndexComplex(2, subs, below)


# ---------------------------------------------------------------------------
# index complexes and construction


def test_partite_index_has_one_copy_per_subset():
    idx = IndexComplex.partite(4, 3)
    assert len(idx) == 4 + 1 + 6 + 4
    for c in idx.copies:
        assert idx.copies_of(idx.subset(c)) == [c]
    assert idx.singletons == (0, 1, 2, 3)


def test_repeated_subset_needs_explicit_order():
    with pytest.raises(AmbiguousCopy):
        IndexComplex(2, [(0,), (1,), (), (0, 1), (0, 1)])


def test_non_transitive_order_rejected():
    subs = [(0,), (1,), (), (0, 1)]
    below = [{(0,): 0, (): 2}, {(1,): 1, (): 2}, {(): 2}, {(0,): 1, (1,): 1, (): 2, (0, 1): 3}]
    with pytest.raises(ComplexError):
        IndexComplex(2, subs, below)


def test_complete_bipartite_counts():
    idx = IndexComplex.partite(2, 2)
    K = make_complete(idx, [2, 2])
    assert K.count(idx.copy((0, 1))) == 4
    assert K.count(0) == K.count(1) == 2
    assert K.count(idx.copy(())) == 1


@pytest.mark.parametrize("n", [1, 3, 4])
def test_complete_triple_part(n):
    idx = IndexComplex.partite(3, 3)
    assert make_complete(idx, [n] * 3).count(idx.copy((0, 1, 2))) == n ** 3


def test_two_copies_stored_separately():
    idx = two_copies_of_pair()
    K = make_complete(idx, [2, 2])
    a, b = idx.copies_of((0, 1))
    assert (a, b) == (3, 4)
    assert K.tuples(a) == K.tuples(b) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    thin = K.replace({**K.parts, b: np.eye(2, dtype=bool)})
    assert thin.count(a) == 4 and thin.count(b) == 2
    assert validate(thin).ok


def test_ground_mismatch():
    with pytest.raises(GroundMismatch):
        make_complete(IndexComplex.partite(3, 2), [2, 2])
    with pytest.raises(GroundMismatch):
        Complex(IndexComplex.partite(2, 2), Ground.of([2, 2, 2]), {})


# ---------------------------------------------------------------------------
# validate


def test_example_complex_is_valid():
    H, GM = tetrahedron_example()
    assert validate(H).ok
    assert validate(GM.complex).ok


def test_missing_vertex_is_downward_closure_violation():
    idx = IndexComplex.partite(2, 2)
    K = make_complete(idx, [2, 2])
    bad = K.replace({**K.parts, 0: np.array([False, True])})
    kinds = {v.kind for v in validate(bad).violations}
    assert kinds == {"downward-closure"}
    assert any(v.tuple == (0, 0) for v in validate(bad).violations)


def test_undefined_face_is_closure_violation():
    idx = IndexComplex.partite(3, 3)
    K = make_complete(idx, [2, 2, 2])
    parts = dict(K.parts)
    del parts[idx.copy((0, 1))]
    rep = validate(K.replace(parts))
    assert [v.kind for v in rep.violations] == ["undefined-closure"]


def test_wrong_shape_is_partite_violation():
    idx = IndexComplex.partite(2, 2)
    K = make_complete(idx, [2, 3])
    bad = K.replace({**K.parts, idx.copy((0, 1)): np.ones((3, 2), dtype=bool)})
    assert [v.kind for v in validate(bad).violations] == ["partite"]


# ---------------------------------------------------------------------------
# restriction


def test_restrict_by_empty_complex_is_identity():
    H, _ = tetrahedron_example()
    assert restrict(H, empty_complex(H.index, H.ground)) == H


def test_undefined_singleton_acts_as_whole_part():
    idx = IndexComplex.partite(3, 2)
    rng = np.random.default_rng(5)
    H = M.random_complex(rng, idx, Ground.of([4, 4, 4]), M.full_defined(idx), density=0.6)
    g2 = np.array([True, False, True, False]) & H.part(1)
    G = H.replace({idx.copy(()): np.ones((), dtype=bool), 1: g2})
    R = restrict(H, G)
    assert np.array_equal(R.part(0), H.part(0))
    assert np.array_equal(R.part(idx.copy((0, 1))), H.part(idx.copy((0, 1))) & g2[None, :])
    assert np.array_equal(R.part(idx.copy((0, 2))), H.part(idx.copy((0, 2))))


def test_empty_defined_part_differs_from_undefined():
    idx = IndexComplex.partite(2, 2)
    H = make_complete(idx, [2, 2])
    undefined = empty_complex(idx, H.ground)
    empty = undefined.replace({**undefined.parts, 0: np.zeros(2, dtype=bool)})
    assert restrict(H, undefined) == H
    R = restrict(H, empty)
    assert R.count(0) == 0 and R.count(idx.copy((0, 1))) == 0 and R.count(1) == 2


def test_restrict_requires_subcomplex():
    idx = IndexComplex.partite(2, 2)
    H = from_edges(idx, [2, 2], {idx.copy((0, 1)): [(0, 0)]})
    G = make_complete(idx, [2, 2])
    with pytest.raises(NotSubcomplex):
        restrict(H, G)


def test_restrict_matches_comprehension_r4():
    idx = IndexComplex.partite(4, 3)
    for seed in range(20):
        rng = np.random.default_rng(seed)
        H = M.random_complex(rng, idx, Ground.of([4] * 4), M.full_defined(idx))
        G = M.random_complex(rng, idx, H.ground, inside=H)
        assert M.Model.of(restrict(H, G)) == M.restrict(M.Model.of(H), M.Model.of(G))


# ---------------------------------------------------------------------------
# composition, union, intersection


def test_compose_with_subcomplex_is_restriction():
    rng = np.random.default_rng(11)
    idx = IndexComplex.partite(4, 3)
    G = M.random_complex(rng, idx, Ground.of([3] * 4), M.full_defined(idx))
    G2 = M.random_complex(rng, idx, G.ground, inside=G)
    assert compose(G, G2) == restrict(G, G2)


def test_separate_compose_is_union():
    idx = IndexComplex.partite(4, 2)
    rng = np.random.default_rng(2)
    H = M.random_complex(rng, idx, Ground.of([3] * 4), M.full_defined(idx))
    A = M.random_complex(rng, idx, H.ground, {idx.copy(s) for s in [(), (0,), (1,), (0, 1)]}, inside=H)
    B = M.random_complex(rng, idx, H.ground, {idx.copy(s) for s in [(), (2,), (3,), (2, 3)]}, inside=H)
    assert compose(A, B) == union(A, B)


def test_union_intersection_definedness():
    idx = IndexComplex.partite(2, 2)
    H = make_complete(idx, [2, 2])
    H2 = H.replace({c: a for c, a in H.parts.items() if c != idx.copy((0, 1))})
    e = idx.copy((0, 1))
    assert np.array_equal(union(H, H2).part(e), H.part(e))
    assert not intersection(H, H2).defined(e)
    assert union(H, H) == H and intersection(H, H) == H


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_operations_return_valid_complexes(seed):
    rng = np.random.default_rng(seed)
    idx, ground = M.random_frame(rng)
    H = M.random_complex(rng, idx, ground, M.full_defined(idx))
    G = M.random_complex(rng, idx, ground, inside=H)
    G2 = M.random_complex(rng, idx, ground, inside=H)
    for out in (restrict(H, G), compose(G, G2), union(G, G2), intersection(G, G2)):
        assert validate(out).ok


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_algebra_laws_property(seed):
    ck = check_seed(seed)
    assert not ck.failures, ck.failures


def test_frames_must_agree():
    a = make_complete(IndexComplex.partite(2, 2), [2, 2])
    b = make_complete(IndexComplex.partite(2, 2), [2, 3])
    with pytest.raises(GroundMismatch):
        compose(a, b)
    with pytest.raises(GroundMismatch):
        union(a, b)


# ---------------------------------------------------------------------------
# neighbourhoods


def test_vertex_neighbourhood_of_complete_complex():
    idx = IndexComplex.partite(3, 3)
    K = make_complete(idx, [2, 3, 4])
    N = neighborhood(K, 0, (1,))
    assert N == K.replace({c: K.parts[c] for c in idx.copies if 0 not in idx.subset(c)})


def test_example_vertex_neighbourhood_pairs():
    _, GM = tetrahedron_example()
    G = GM.complex
    N = neighborhood(G, 0, (0,))
    assert np.array_equal(N.part(G.index.copy((1, 2))), triple(G, 0, 1, 2)[0])
    assert np.array_equal(N.part(1), pair(G, 0, 1)[0])


def test_neighbourhood_of_edge_matches_comprehension():
    _, GM = tetrahedron_example(seed=8)
    G = GM.complex
    idx = G.index
    c = idx.copy((0, 2))
    for S in G.tuples(c)[:10]:
        N = neighborhood(G, c, S)
        ref = M.neighborhood(M.neighborhood(M.Model.of(G), (0, S[0])), (2, S[1]))
        assert M.Model.of(N) == ref


def test_neighbourhood_rejects_missing_simplex():
    idx = IndexComplex.partite(2, 2)
    H = from_edges(idx, [2, 2], {idx.copy((0, 1)): [(0, 0)]})
    with pytest.raises(ComplexError):
        neighborhood(H, idx.copy((0, 1)), (1, 1))


def test_neighbourhood_in_multicomplex_needs_target():
    idx = two_copies_of_pair()
    K = make_complete(idx, [2, 2])
    with pytest.raises(AmbiguousCopy):
        neighborhood(K, 0, (0,))
    thin = K.replace({**K.parts, 4: np.eye(2, dtype=bool)})
    N = neighborhood(thin, 0, (0,), target={1: 4})
    assert N.part(1).tolist() == [True, False]
    N = neighborhood(thin, 0, (0,), target={1: 3})
    assert N.part(1).tolist() == [True, True]


def test_up_set_holds_supersets():
    idx = IndexComplex.partite(2, 2)
    K = make_complete(idx, [2, 3])
    up = up_set(K, 0, (1,))
    assert up[idx.copy((0, 1))].sum() == 3 and up[0].tolist() == [False, True]


# ---------------------------------------------------------------------------
# star sets and densities


def test_star_set_of_triple_is_triangles():
    _, GM = tetrahedron_example(seed=4)
    G = GM.complex
    c = G.index.copy((1, 2, 3))
    tri = pair(G, 1, 2)[:, :, None] & pair(G, 1, 3)[:, None, :] & pair(G, 2, 3)[None, :, :]
    assert np.array_equal(star_set(G, c), tri)
    assert np.all(star_set(G, c) >= G.part(c))


def test_star_set_of_singleton_is_whole_part():
    idx = IndexComplex.partite(2, 2)
    H = from_edges(idx, [3, 2], {0: [(1,)]})
    assert star_set(H, 0).tolist() == [True, True, True]


def test_star_set_with_undefined_pair():
    idx = IndexComplex.partite(3, 3)
    rng = np.random.default_rng(9)
    H = M.random_complex(rng, idx, Ground.of([3, 3, 3]), M.full_defined(idx))
    parts = {c: a for c, a in H.parts.items() if idx.size(c) < 2 or idx.subset(c) != (0, 1)}
    parts.pop(idx.copy((0, 1, 2)))
    J = H.replace(parts)
    want = (H.part(0)[:, None, None] & H.part(1)[None, :, None] & pair(H, 0, 2)[:, None, :]
            & pair(H, 1, 2)[None, :, :])
    assert np.array_equal(star_set(J, idx.copy((0, 1, 2))), want)


def test_densities_of_complete_complex():
    idx = IndexComplex.partite(3, 3)
    K = make_complete(idx, [2, 3, 2])
    for c in idx.copies:
        if idx.size(c):
            assert relative_density(K, c) == 1 == absolute_density(K, c)


def test_absolute_equals_relative_on_full_vertex_parts():
    idx = IndexComplex.partite(2, 2)
    H = from_edges(idx, [3, 4], {idx.copy((0, 1)): [(0, 0), (1, 3), (2, 2)]})
    H = H.replace({**H.parts, 0: np.ones(3, dtype=bool), 1: np.ones(4, dtype=bool)})
    e = idx.copy((0, 1))
    assert relative_density(H, e) == absolute_density(H, e) == Fraction(3, 12)


def test_relative_density_recount():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        idx = IndexComplex.partite(3, 3)
        H = M.random_complex(rng, idx, Ground.of([4, 4, 4]), M.full_defined(idx))
        m = M.Model.of(H)
        for c in idx.copies:
            I = idx.subset(c)
            if len(I) < 1:
                continue
            star = [S for S in m.complete(I) if all(m.holds(A) for A in M.faces(S) if A != S)]
            if not star:
                with pytest.raises(DensityUndefined):
                    relative_density(H, c)
                continue
            assert relative_density(H, c) == Fraction(len(m.parts[I]), len(star))
            assert 0 <= relative_density(H, c) <= 1


def test_density_of_empty_star_is_an_error():
    idx = IndexComplex.partite(2, 2)
    H = from_edges(idx, [2, 2], {0: [], 1: [(0,)]})
    with pytest.raises(DensityUndefined):
        relative_density(H, idx.copy((0, 1)))


# ---------------------------------------------------------------------------
# restriction to a vertex neighbourhood


def test_preplus_with_trivial_index_is_identity():
    _, GM = tetrahedron_example()
    G = GM.complex
    assert preplus(G, 0, 2, [G.index.copy(())]) == G


def test_preplus_example_gives_tetrahedron_completions():
    _, GM = tetrahedron_example(seed=6)
    G = GM.complex
    idx = G.index
    I = idx.down((1, 2), (1, 3), (2, 3))
    out = preplus(G, 0, 0, I)
    want = (triple(G, 1, 2, 3) & triple(G, 0, 1, 2)[0][:, :, None] & triple(G, 0, 1, 3)[0][:, None, :]
            & triple(G, 0, 2, 3)[0][None, :, :])
    assert np.array_equal(out.part(idx.copy((1, 2, 3))), want)


def test_preplus_matches_unrolled_definition():
    for seed in range(15):
        rng = np.random.default_rng(seed)
        idx = IndexComplex.partite(4, 3)
        G = M.random_complex(rng, idx, Ground.of([3] * 4), M.full_defined(idx))
        members = np.flatnonzero(G.part(0))
        if members.size == 0:
            continue
        v = int(rng.choice(members))
        I = M.random_defined(rng, idx)
        I = {c for c in I if 0 not in idx.subset(c)} | {idx.copy(())}
        I = {c for c in I if set(idx.below(c).values()) <= I}
        m = M.Model.of(G)
        nb = M.neighborhood(m, (0, v))
        J = M.Model(m.sizes, {idx.subset(c): nb.parts[idx.subset(c)] for c in I if idx.subset(c) in nb.parts})
        assert M.Model.of(preplus(G, 0, v, I)) == M.restrict(m, J)


def test_preplus_errors():
    _, GM = tetrahedron_example()
    G = GM.complex
    with pytest.raises(ComplexError):
        preplus(G, 0, 99, [G.index.copy(())])
    with pytest.raises(ComplexError):
        preplus(G, 0, 0, [G.index.copy((1, 2))])


# ---------------------------------------------------------------------------
# marked complexes


def test_marks_must_be_top_level_edges():
    idx = IndexComplex.partite(2, 2)
    H = from_edges(idx, [2, 2], {idx.copy((0, 1)): [(0, 0)]})
    e = idx.copy((0, 1))
    MarkedComplex(H, {e: np.array([[True, False], [False, False]])})
    with pytest.raises(ComplexError):
        MarkedComplex(H, {e: np.ones((2, 2), dtype=bool)})
    with pytest.raises(ComplexError):
        MarkedComplex(H, {0: np.array([True, False])})


def test_induced_renumbers():
    idx = IndexComplex.partite(2, 2)
    K = make_complete(idx, [3, 3])
    e = idx.copy((0, 1))
    GM = MarkedComplex(K, {e: np.eye(3, dtype=bool)})
    sub = GM.induced({0: [0, 2], 1: [2]})
    assert sub.complex.ground.as_dict() == {0: 2, 1: 1}
    assert sub.mark(e).tolist() == [[False], [True]]


def test_complete_tuple_enumeration_matches_product():
    idx = IndexComplex.partite(3, 2)
    K = make_complete(idx, [2, 1, 3])
    c = idx.copy((0, 2))
    assert K.tuples(c) == list(product(range(2), range(3)))
