import numpy as np
import pytest

from blowup.complex import IndexComplex, MarkedComplex, make_complete
from blowup.gen import InstanceSpec, balanced_bipartite, gen_marks, gen_regular_complex
from blowup.superreg import (DeletionBoundExceeded, RestrictionError, SuperRegParams, admissible,
                             check_super_regular, delete_to_super_regular, draw_restriction, index_families,
                             super_restrict, unmarked_complex)

PARAMS = SuperRegParams(0.1, 0.15, 0.3, 0.1, 0.5)


def test_params_validation():
    with pytest.raises(ValueError):
        SuperRegParams(0.2, 0.1, 0.3, 0.1, 0.5)
    with pytest.raises(ValueError):
        SuperRegParams(0.0, 0.1, 0.3, 0.1, 0.5)
    with pytest.raises(ValueError):
        SuperRegParams(0.05, 0.1, 0.3, 0.1, 0.5, strict=True)
    SuperRegParams(0.05, 0.1, 0.2, 0.3, 0.5, strict=True)


def test_complete_complex_is_super_regular():
    for k, r in ((2, 3), (3, 4)):
        G = make_complete(IndexComplex.partite(r, k), [5] * r)
        rep = check_super_regular(MarkedComplex.unmarked(G), PARAMS, seed=1)
        assert rep.ok, rep.violations[:3]
        assert rep.checked["i.density"] > 0 and rep.checked["ii.density"] > 0


def test_heavily_marked_complex_fails_the_mark_condition():
    G = make_complete(IndexComplex.partite(3, 2), [4, 4, 4])
    GM = gen_marks(G, 0.9, 0)
    rep = check_super_regular(GM, PARAMS, with_preplus=False)
    assert rep.failed("ii.marks")


def test_sparse_pair_fails_density_floor():
    G = gen_regular_complex(InstanceSpec(k=2, r=2, sizes=20, densities={2: 0.2}, seed=0))
    rep = check_super_regular(MarkedComplex.unmarked(G), PARAMS)
    assert rep.failed("i.density")


def test_index_families_are_downward_closed():
    G = make_complete(IndexComplex.partite(4, 3), [2] * 4)
    idx = G.index
    fams = index_families(G, 0)
    assert len(fams) == len(set(fams))
    for fam in fams:
        for c in fam:
            assert all(d in fam for d in idx.strict_below(c) if idx.size(d) > 0)
            assert idx.base_of(0) not in idx.subset(c)


def test_deletion_on_complete_deletes_nothing():
    G = make_complete(IndexComplex.partite(3, 2), [6, 6, 6])
    res = delete_to_super_regular(G, PARAMS, seed=0)
    assert all(v == [] for v in res.deleted.values())
    assert res.report.ok


def test_equalize_gives_equal_part_sizes():
    G = gen_regular_complex(InstanceSpec(k=2, r=3, sizes=[30, 30, 30], densities={2: 0.6}, seed=2))
    e = G.index.copy((0, 1))
    adj = G.part(e).copy()
    adj[:3] = False
    G = G.replace({**G.parts, e: adj})
    res = delete_to_super_regular(G, PARAMS, seed=0, check=False)
    sizes = {res.complex.complex.ground.size(q) for q in res.complex.complex.ground.parts}
    assert len(sizes) == 1
    assert {0, 1, 2} <= set(res.deleted[0])


def test_planted_low_degree_vertices_are_deleted():
    for seed in range(5):
        G = balanced_bipartite(200, 0.5, 2, seed)
        e = G.index.copy((0, 1))
        adj = G.part(e).copy()
        rng = np.random.default_rng(seed)
        rows = rng.choice(200, size=6, replace=False)
        for v in rows:
            nb = np.flatnonzero(adj[v])
            adj[v, nb[: len(nb) // 2]] = False
        G = G.replace({**G.parts, e: adj})
        p = SuperRegParams(0.05, 0.1, 0.3, 0.1, 0.5)
        res = delete_to_super_regular(G, p, equalize=False, target_fraction=0.05, check=False, seed=seed)
        flagged = {v for q, v, why in res.log if why != "equalize"}
        assert set(rows.tolist()) <= set(res.deleted[0])
        assert flagged >= set(rows.tolist())
        assert all(len(res.deleted[q]) == 10 for q in (0, 1))
        left = res.complex.complex.part(e)
        bound = (p.d - 2 * p.eps) * (1 - p.eps) * 200
        assert left.sum(1).min() >= bound and left.sum(0).min() >= bound


def test_deletion_bound_is_enforced():
    G = balanced_bipartite(40, 0.5, 2, 0)
    e = G.index.copy((0, 1))
    adj = G.part(e).copy()
    adj[:10] = False
    G = G.replace({**G.parts, e: adj})
    with pytest.raises(DeletionBoundExceeded) as err:
        delete_to_super_regular(G, PARAMS, target_fraction=0.05, check=False)
    assert err.value.part == 0 and err.value.wanted >= 10


def test_deletion_never_adds_marks():
    G = gen_regular_complex(InstanceSpec(k=3, r=3, sizes=10, densities={2: 0.8, 3: 0.7}, seed=4))
    GM = gen_marks(G, 0.05, 1)
    res = delete_to_super_regular(GM, SuperRegParams(0.1, 0.2, 0.3, 0.2, 0.5), seed=0, check=False)
    keep = {q: res.kept(q) for q in G.ground.parts}
    for c, m in res.complex.marks.items():
        assert np.array_equal(m, GM.mark(c)[np.ix_(*[keep[p] for p in G.index.axes(c)])])
        assert not (m & ~res.complex.complex.part(c)).any()


def test_super_restrict_identity():
    G = make_complete(IndexComplex.partite(3, 2), [5, 5, 5])
    GM = MarkedComplex.unmarked(G)
    out, rep = super_restrict(GM, {}, PARAMS, 0.5)
    assert out == GM and rep.ok


def test_super_restrict_precondition():
    G = make_complete(IndexComplex.partite(2, 2), [10, 10])
    with pytest.raises(RestrictionError) as err:
        super_restrict(MarkedComplex.unmarked(G), {0: range(10), 1: range(3)}, PARAMS, 0.5, check=False)
    assert ("size", 1) in err.value.pairs
    out, _ = super_restrict(MarkedComplex.unmarked(G), {1: range(6)}, PARAMS, 0.5, check=False)
    assert out.complex.ground.size(1) == 6


def test_unmarked_complex_removes_marks_only():
    G = make_complete(IndexComplex.partite(3, 2), [3, 3, 3])
    GM = gen_marks(G, 0.3, 2)
    J = unmarked_complex(GM)
    for c in G.parts:
        assert np.array_equal(J.part(c), G.part(c) & ~GM.mark(c))


def test_admissible_and_drawn_restrictions():
    G = make_complete(IndexComplex.partite(3, 2), [8, 8, 8])
    full = {q: np.ones(8, dtype=bool) for q in G.ground.parts}
    assert admissible(G, full, 0.5)
    small = dict(full)
    small[0] = np.zeros(8, dtype=bool)
    small[0][:2] = True
    assert not admissible(G, small, 0.5)
    keep, used = draw_restriction(G, 0.5, np.random.default_rng(0))
    assert used >= 1 and admissible(G, keep, 0.5)
