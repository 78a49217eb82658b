"""Algebra laws of restriction and composition, checked on one seeded draw.

Every law is checked twice: as an identity between library results, and
by comparing each library result with the set model in ``_model``.
"""
from __future__ import annotations

import numpy as np

import _model as M
from blowup.complex import (Complex, compose, empty_complex, intersection, is_subcomplex, neighborhood,
                            restrict, union)


def vertex_nb(G: Complex, part: int, v: int) -> Complex:
    """``G(v)`` also when ``v`` is missing from a defined ``G_i`` (all parts above it empty)."""
    if G.contains(part, (v,)):
        return neighborhood(G, part, (v,))
    idx = G.index
    parts = {}
    for d in idx.above(part):
        if d in G.parts and d != part:
            rest = tuple(i for i in idx.subset(d) if i != idx.base_of(part))
            j = idx.below(d)[rest]
            parts[j] = np.zeros(G.shape(j), dtype=bool)
    if part in G.parts:
        parts[idx.copy(())] = np.zeros((), dtype=bool)
    return G.replace(parts)


def below(G: Complex, c: int) -> Complex:
    keep = set(G.index.below(c).values())
    return G.replace({d: a for d, a in G.parts.items() if d in keep})


def subset_as_sets(G: Complex, H: Complex) -> bool:
    """Every simplex of G lies in H (an Undefined part of H holds nothing)."""
    for c, a in G.parts.items():
        if c in H.parts:
            if np.any(a & ~H.parts[c]):
                return False
        elif a.any():
            return False
    return True


class Checker:
    def __init__(self, with_model: bool = True):
        self.with_model = with_model
        self.failures: list[str] = []
        self.checks = 0

    def eq(self, name: str, a: Complex, b: Complex) -> None:
        self.checks += 1
        if a != b:
            self.failures.append(name)

    def model(self, name: str, lib: Complex, ref: M.Model) -> None:
        if not self.with_model:
            return
        self.checks += 1
        if M.Model.of(lib) != ref:
            self.failures.append(f"{name} (model)")

    def true(self, name: str, cond: bool) -> None:
        self.checks += 1
        if not cond:
            self.failures.append(name)


def draw(seed: int):
    rng = np.random.default_rng(seed)
    idx, ground = M.random_frame(rng)
    H = M.random_complex(rng, idx, ground, M.full_defined(idx))
    G = M.random_complex(rng, idx, ground, inside=H)
    G2 = M.random_complex(rng, idx, ground, inside=H)
    G3 = M.random_complex(rng, idx, ground, inside=H)
    return rng, idx, ground, H, G, G2, G3


def check_seed(seed: int, with_model: bool = True, neighbourhoods: int = 4) -> Checker:
    ck = Checker(with_model)
    rng, idx, ground, H, G, G2, G3 = draw(seed)
    mH, mG, mG2, mG3 = (M.Model.of(X) for X in (H, G, G2, G3))

    # the basic operations against the model
    GG2 = compose(G, G2)
    ck.model("compose", GG2, M.compose(mG, mG2))
    ck.model("restrict", restrict(H, G), M.restrict(mH, mG))
    ck.model("union", union(G, G2), M.union(mG, mG2))
    ck.model("intersection", intersection(G, G2), M.intersection(mG, mG2))
    ck.true("intersection <= compose <= union",
            subset_as_sets(intersection(G, G2), GG2) and subset_as_sets(GG2, union(G, G2)))

    # (i) commutative and associative
    ck.eq("(i) commutative", GG2, compose(G2, G))
    ck.eq("(i) associative", compose(GG2, G3), compose(G, compose(G2, G3)))
    ck.model("(i) associative", compose(GG2, G3), M.compose(M.compose(mG, mG2), mG3))

    # (ii) neighbourhoods of a composition, on sampled v in S in G u G'
    U = union(G, G2)
    pool = [(c, a) for c in sorted(U.parts) if idx.size(c) >= 1 for a in range(idx.size(c))]
    for _ in range(neighbourhoods if pool else 0):
        c, a = pool[int(rng.integers(len(pool)))]
        part = idx.axes(c)[a]
        v = int(rng.integers(ground.size(part)))
        rest = idx.below(c)[tuple(i for i in idx.subset(c) if i != idx.base_of(part))]
        lhs = vertex_nb(below(GG2, c), part, v)
        rhs = compose(compose(below(G, rest), below(G2, rest)),
                      compose(vertex_nb(below(G, c), part, v), vertex_nb(below(G2, c), part, v)))
        ok = rest not in lhs.parts or (rest in rhs.parts and np.array_equal(
            lhs.parts[rest] & U.parts[c].take(v, axis=a), rhs.parts[rest] & U.parts[c].take(v, axis=a)))
        ck.true("(ii) neighbourhood of composition", ok)
        if with_model:
            vv = (idx.base_of(part), v)
            m_l = M.neighborhood(M.compose(mG, mG2).below(_simplex(idx, c)), vv)
            m_r = M.compose(mG.below(_simplex(idx, rest)), mG2.below(_simplex(idx, rest)),
                            M.neighborhood(mG.below(_simplex(idx, c)), vv),
                            M.neighborhood(mG2.below(_simplex(idx, c)), vv))
            mU = M.union(mG, mG2)
            J = idx.subset(rest)
            good = all((S - {vv} in m_l.parts.get(J, ())) == (S - {vv} in m_r.parts.get(J, ()))
                       for S in mU.parts.get(idx.subset(c), ()) if vv in S)
            ck.true("(ii) neighbourhood of composition (model)", good)

    # (iii) separate complexes
    singles = list(range(idx.base_size))
    rng.shuffle(singles)
    cut = int(rng.integers(0, len(singles) + 1))
    A = M.random_complex(rng, idx, ground, M.random_defined(rng, idx, singletons=set(singles[:cut])), inside=H)
    B = M.random_complex(rng, idx, ground, M.random_defined(rng, idx, singletons=set(singles[cut:])), inside=H)
    ck.eq("(iii) G*G' = G u G'", compose(A, B), union(A, B))
    HAB = restrict(restrict(H, A), B, check=False)
    ck.eq("(iii) H[G][G'] = H[G'][G]", HAB, restrict(restrict(H, B), A, check=False))
    ck.eq("(iii) H[G][G'] = H[G u G']", HAB, restrict(H, union(A, B)))
    ck.model("(iii) H[G u G']", restrict(H, union(A, B)), M.restrict(mH, M.union(M.Model.of(A), M.Model.of(B))))

    # (iv)
    ck.eq("(iv) H[G][G*G'] = H[G'][G*G']",
          restrict(restrict(H, G), GG2, check=False), restrict(restrict(H, G2), GG2, check=False))
    ck.model("(iv)", restrict(restrict(H, G), GG2, check=False), M.restrict(M.restrict(mH, mG), M.compose(mG, mG2)))

    # (v) G' inside H[G]
    HG = restrict(H, G)
    Gin = M.random_complex(rng, idx, ground, inside=HG)
    ck.true("(v) precondition", subset_as_sets(Gin, HG))
    ck.eq("(v) H[G][G'] = H[G*G']", restrict(HG, Gin), restrict(H, compose(G, Gin)))
    ck.model("(v)", restrict(HG, Gin), M.restrict(mH, M.compose(mG, M.Model.of(Gin))))

    # (vi) G' inside G
    Gs = M.random_complex(rng, idx, ground, inside=G)
    GGs = restrict(G, Gs, check=False)
    ck.eq("(vi) G*G' = G[G']", compose(G, Gs), GGs)
    ck.eq("(vi) H[G][G[G']] = H[G'][G[G']]", restrict(HG, GGs, check=False),
          restrict(restrict(H, Gs, check=False), GGs, check=False))
    ck.eq("(vi) H[G][G[G']] = H[G][G']", restrict(HG, GGs, check=False), restrict(HG, Gs, check=False))
    ck.model("(vi) G[G']", GGs, M.restrict(mG, M.Model.of(Gs)))
    Gw = M.random_complex(rng, idx, ground, set(G.parts), inside=G)
    ck.eq("(vi) G' defined wherever G is: H[G][G'] = H[G']",
          restrict(HG, Gw, check=False), restrict(H, Gw, check=False))

    # restriction is monotone in each defined part
    bigger = union(G, M.random_complex(rng, idx, ground, set(G.parts), inside=H))
    ck.true("restriction monotone", subset_as_sets(restrict(H, G), restrict(H, bigger)))
    # H[G] = H*G, and restricting by ({empty}) changes nothing
    ck.eq("H[G] = H*G", HG, compose(H, G))
    ck.eq("H[({0})] = H", restrict(H, empty_complex(idx, ground)), H)
    ck.model("H[({0})]", restrict(H, empty_complex(idx, ground)), M.restrict(mH, M.empty(mH.sizes)))
    ck.true("G is a subcomplex of H", is_subcomplex(G, H))
    return ck


def _simplex(idx, c):
    """Any simplex with the index of copy ``c`` (the model's ``below`` only reads the index)."""
    return frozenset((i, 0) for i in idx.subset(c))
