"""Greedy cover of exceptional vertices by copies of a complete partite F."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..complex import Complex
from .cells import CellSystem

Vertex = tuple  # (part, ordinal)


class CoverError(RuntimeError):
    def __init__(self, vertex: Vertex, msg: str = ""):
        super().__init__(msg or f"no copy of F found through vertex {vertex}")
        self.vertex = vertex


@dataclass(frozen=True)
class FCopy:
    """Class ``c`` of F sits in part ``parts[c]`` on the ordinals ``classes[c]``."""

    parts: tuple[int, ...]
    classes: tuple[tuple[int, ...], ...]

    def vertices(self) -> list[Vertex]:
        return [(p, v) for p, cls in zip(self.parts, self.classes) for v in cls]

    def to_dict(self) -> dict:
        return {"parts": list(self.parts), "classes": [list(c) for c in self.classes]}


def edge_tensor(G: Complex, parts: Sequence[int]) -> np.ndarray:
    """Top level of ``G`` on the given parts, axes in the given order."""
    c = G.index.copy(tuple(sorted(parts)))
    axes = G.index.axes(c)
    return np.transpose(G.part(c), [axes.index(p) for p in parts])


def copy_edges_ok(G: Complex, cp: FCopy) -> bool:
    """Every k-tuple across distinct classes is an edge of ``G``."""
    k = G.k
    for sel in combinations(range(len(cp.parts)), k):
        T = edge_tensor(G, [cp.parts[c] for c in sel])
        if not T[np.ix_(*[list(cp.classes[c]) for c in sel])].all():
            return False
    return True


@dataclass
class CoverResult:
    copies: list[FCopy] = field(default_factory=list)
    failed: list[Vertex] = field(default_factory=list)
    heavy: set = field(default_factory=set)
    nodes: int = 0


def _search(G: Complex, v: Vertex, F: Sequence[int], avail: Mapping[int, np.ndarray],
            rng: np.random.Generator, node_budget: int) -> tuple[FCopy | None, int]:
    """Depth-first search for a copy of F with ``v`` in it and all other vertices available.

    Candidates for each class are cut down to the common link of the
    classes already chosen, so any complete assignment is a copy.
    """
    k, r = G.k, len(G.ground.parts)
    nodes = 0
    for parts in permutations(range(r), len(F)):
        for home in range(len(F)):
            if parts[home] != v[0]:
                continue
            order = [home] + sorted((c for c in range(len(F)) if c != home), key=lambda c: (F[c], c))
            chosen: dict[int, tuple] = {}

            def candidates(c: int) -> np.ndarray:
                mask = avail[parts[c]].copy()
                if parts[c] == v[0]:
                    mask[v[1]] = False
                # prune with the link of every chosen (k-1)-tuple
                for sel in combinations(list(chosen), k - 1):
                    T = edge_tensor(G, [parts[d] for d in sel] + [parts[c]])
                    for tup in _product([chosen[d] for d in sel]):
                        mask &= T[tup]
                return np.flatnonzero(mask)

            def go(pos: int) -> bool:
                nonlocal nodes
                if pos == len(order):
                    return True
                c = order[pos]
                need = F[c] - (1 if c == home else 0)
                cand = candidates(c)
                if cand.size < need:
                    return False
                cand = rng.permutation(cand)
                fixed = (v[1],) if c == home else ()
                for extra in combinations(cand.tolist(), need):
                    nodes += 1
                    if nodes > node_budget:
                        return False
                    cls = tuple(sorted(fixed + tuple(int(e) for e in extra)))
                    chosen[c] = cls
                    if go(pos + 1):
                        return True
                    del chosen[c]
                return False

            if go(0):
                return FCopy(tuple(parts), tuple(chosen[c] for c in range(len(F)))), nodes
            if nodes > node_budget:
                return None, nodes
    return None, nodes


def _product(lists: list[tuple]) -> list[tuple]:
    out = [()]
    for lst in lists:
        out = [t + (x,) for t in out for x in lst]
    return out


def cover_exceptional(G: Complex, A0: Iterable[Vertex], cells: CellSystem, reserve: Mapping[int, np.ndarray],
                      F: Sequence[int], gamma: float = 0.2, seed: int = 0, strict: bool = True,
                      node_budget: int = 20000) -> CoverResult:
    """Cover each vertex of ``A0`` in turn by a copy of F in ``G``.

    Other vertices of a copy come from ``reserve`` (per-part masks), are
    used at most once, and avoid heavy clusters: those with more than
    ``gamma * n1`` vertices already covered.  With ``strict`` the first
    vertex without a copy raises ``CoverError``; otherwise it is recorded
    in ``failed``.
    """
    rng = np.random.default_rng(seed)
    avail = {p: np.asarray(reserve[p], dtype=bool).copy() for p in G.ground.parts}
    covered: dict[tuple, int] = {}
    out = CoverResult()
    A0 = list(A0)
    pending = set(A0)
    for v in A0:
        if v not in pending:
            continue
        mask = {p: a.copy() for p, a in avail.items()}
        for p in mask:
            heavy = [j for (q, j), cnt in covered.items() if q == p and cnt > gamma * cells.n1]
            if heavy:
                mask[p] &= ~np.isin(cells.labels[p], heavy)
        cp, nodes = _search(G, v, F, mask, rng, node_budget)
        out.nodes += nodes
        if cp is None:
            if strict:
                raise CoverError(v)
            out.failed.append(v)
            pending.discard(v)
            continue
        out.copies.append(cp)
        for p, u in cp.vertices():
            pending.discard((p, u))
            avail[p][u] = False
            z = cells.cluster_of(p, u)
            covered[z] = covered.get(z, 0) + 1
    out.heavy = {z for z, cnt in covered.items() if cnt > gamma * cells.n1}
    return out
