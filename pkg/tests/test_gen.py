import hashlib

import numpy as np
import pytest

from blowup.complex import validate
from blowup.gen import (FAMILIES, InstanceSpec, balanced_bipartite, build_instance, gen_marks, gen_regular_complex,
                        gen_restrictions, gen_target, max_degree)
from blowup.io import to_text


def digest(G):
    return hashlib.sha256(to_text(G).encode()).hexdigest()


def test_same_seed_same_complex():
    spec = InstanceSpec(k=3, r=4, sizes=6, densities={2: 0.7, 3: 0.5}, seed=9)
    assert digest(gen_regular_complex(spec)) == digest(gen_regular_complex(spec))


def test_distinct_seeds_give_distinct_complexes():
    hashes = {digest(gen_regular_complex(InstanceSpec(k=2, r=3, sizes=8, densities={2: 0.5}, seed=s)))
              for s in range(100)}
    assert len(hashes) == 100


def test_generated_complexes_are_valid_with_expected_density():
    spec = InstanceSpec(k=3, r=3, sizes=30, densities={2: 0.6, 3: 0.5}, seed=1)
    G = gen_regular_complex(spec)
    validate(G)
    idx = G.index
    for pair in ((0, 1), (0, 2), (1, 2)):
        assert G.count(idx.copy(pair)) / 900 == pytest.approx(0.6, abs=0.05)
    tri = idx.copy((0, 1, 2))
    from blowup.complex import star_set
    assert G.count(tri) / star_set(G, tri).sum() == pytest.approx(0.5, abs=0.05)


def test_spec_round_trip_and_validation():
    spec = InstanceSpec(k=2, r=3, sizes=[4, 5, 6], densities={2: 0.3}, family="random", seed=5)
    assert InstanceSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        InstanceSpec(k=4, r=3)
    with pytest.raises(ValueError):
        InstanceSpec(densities={2: 0.0})
    with pytest.raises(ValueError):
        InstanceSpec(family="tree")


@pytest.mark.parametrize("family", [f for f in FAMILIES if f != "packing"])
@pytest.mark.parametrize("k", [2, 3])
def test_targets_are_valid_and_bounded(family, k):
    r = 3 if family != "matching+clique-factor" else 4
    kw = {"clique": 3} if family == "matching+clique-factor" else {}
    tgt = gen_target(family, [12] * r, 0, k=k, r=r, D=3, **kw)
    validate(tgt.H)
    assert tgt.degree == max_degree(tgt.H)
    if family == "random":
        assert tgt.degree <= 3
    if family in ("clique-factor", "matching"):
        assert tgt.degree <= (1 if family == "matching" else 3)


def test_clique_factor_covers_every_vertex():
    tgt = gen_target("clique-factor", [7, 7, 7], 3, k=2)
    assert tgt.leftovers == {0: 0, 1: 0, 2: 0}
    assert all(tgt.H.count(c) == 7 for c in tgt.H.top_copies())


def test_marks_are_edges_at_the_requested_rate():
    G = gen_regular_complex(InstanceSpec(k=2, r=2, sizes=60, densities={2: 0.5}, seed=0))
    GM = gen_marks(G, 0.2, 1)
    (c,) = GM.marks
    assert not (GM.mark(c) & ~G.part(c)).any()
    assert GM.mark(c).sum() / G.count(c) == pytest.approx(0.2, abs=0.04)


def test_restriction_counts_and_floor():
    spec = InstanceSpec(k=2, r=3, sizes=20, densities={2: 0.5}, seed=0)
    G = gen_regular_complex(spec)
    H = gen_target("matching", spec.sizes, 0, k=2).H
    gamma = gen_restrictions(H, G, 0.1, 0.5, 3)
    assert len(gamma) == 6
    for key, allowed in gamma.items():
        assert len(key) == 1 and allowed.sum() > 0.5 * 20


def test_build_instance_is_deterministic():
    spec = InstanceSpec(k=2, r=3, sizes=10, densities={2: 0.6}, theta=0.1, family="clique-factor", c=0.1, seed=4)
    a, b = build_instance(spec), build_instance(spec)
    assert a["G"] == b["G"] and a["H"] == b["H"]
    assert set(a["gamma"]) == set(b["gamma"])


def test_balanced_bipartite_degrees():
    for seed in range(5):
        G = balanced_bipartite(100, 0.4, slack=2, seed=seed)
        adj = G.part(G.index.copy((0, 1)))
        for deg in (adj.sum(1), adj.sum(0)):
            assert np.all(np.abs(deg - 40) <= 2)
