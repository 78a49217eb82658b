"""Cluster partitions, graph-cells and planted triple-cells.

A planted instance stands in for the output of a regularity decomposition:
we know the clusters, the cells and the dense approximating graph ``G'`` by
construction, and only the observed graph ``G0`` differs from it by noise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ..complex import Complex, ComplexError, Ground, IndexComplex, MarkedComplex

Cluster = tuple  # (part, cluster index)


@dataclass
class CellSystem:
    """Ground truth of a planted instance.

    ``labels[p][v]`` is the cluster of vertex ``v`` in part ``p``.  For
    3-graphs, ``pair_cells[(p, q)]`` holds a global graph-cell id for every
    vertex pair and ``cell_pair[(p, q)][id]`` the cluster pair it lies over.
    ``triads`` maps each planted cluster tuple to the graph-cell ids chosen
    for it (one per pair of its parts, in ``combinations`` order).
    """

    k: int
    r: int
    a1: int
    n1: int
    labels: dict[int, np.ndarray]
    pair_cells: dict[tuple, np.ndarray] = field(default_factory=dict)
    cell_pair: dict[tuple, dict[int, tuple]] = field(default_factory=dict)
    graph_cells: int = 1
    triads: dict[tuple, tuple] = field(default_factory=dict)
    approximation: Complex | None = None

    @property
    def part_tuples(self) -> list[tuple]:
        return list(combinations(range(self.r), self.k))

    def members(self, part: int, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.labels[part] == cluster)

    def cluster_of(self, part: int, v: int) -> Cluster:
        return (part, int(self.labels[part][v]))

    def clusters(self) -> list[Cluster]:
        return [(p, j) for p in range(self.r) for j in range(self.a1)]

    def one_hot(self, part: int) -> np.ndarray:
        lab = self.labels[part]
        out = np.zeros((lab.size, self.a1), dtype=np.int64)
        out[np.arange(lab.size), lab] = 1
        return out

    def pair_cell_ids(self, S: tuple) -> list[list[int]]:
        """Graph-cell ids over each pair of the cluster tuple ``S``."""
        out = []
        for (p, i), (q, j) in combinations(S, 2):
            table = self.cell_pair[(p, q)]
            out.append(sorted(cid for cid, pair in table.items() if pair == (i, j)))
        return out

    def cell_mask(self, S: tuple, cell: tuple) -> np.ndarray:
        """Indicator of the triple-cell ``cell`` over cluster tuple ``S``, on S's vertex grid."""
        mem = [self.members(p, j) for p, j in S]
        mask = np.ones(tuple(m.size for m in mem), dtype=bool)
        if self.k < 3:
            return mask
        for n, (a, b) in enumerate(combinations(range(len(S)), 2)):
            p, q = S[a][0], S[b][0]
            block = self.pair_cells[(p, q)][np.ix_(mem[a], mem[b])] == cell[n]
            shape = [1] * len(S)
            shape[a], shape[b] = block.shape
            mask &= block.reshape(shape)
        return mask

    def to_json_obj(self) -> dict:
        """Partition data only; the approximating graph is saved separately."""
        return {
            "k": self.k, "r": self.r, "a1": self.a1, "n1": self.n1, "graph_cells": self.graph_cells,
            "labels": {str(p): lab.tolist() for p, lab in sorted(self.labels.items())},
            "pair_cells": {f"{p},{q}": ids.tolist() for (p, q), ids in sorted(self.pair_cells.items())},
            "cell_pair": {f"{p},{q}": [[cid, list(pair)] for cid, pair in sorted(tab.items())]
                          for (p, q), tab in sorted(self.cell_pair.items())},
            "triads": [{"S": [list(z) for z in S], "cell": list(cell)} for S, cell in sorted(self.triads.items())],
        }

    @classmethod
    def from_json_obj(cls, data: dict, approximation: Complex | None = None) -> "CellSystem":
        def key(s: str) -> tuple:
            return tuple(int(x) for x in s.split(","))

        return cls(
            k=int(data["k"]), r=int(data["r"]), a1=int(data["a1"]), n1=int(data["n1"]),
            labels={int(p): np.asarray(lab, dtype=np.int64) for p, lab in data["labels"].items()},
            pair_cells={key(pq): np.asarray(ids, dtype=np.int64) for pq, ids in data["pair_cells"].items()},
            cell_pair={key(pq): {int(cid): tuple(pair) for cid, pair in tab}
                       for pq, tab in data["cell_pair"].items()},
            graph_cells=int(data["graph_cells"]),
            triads={tuple(tuple(z) for z in t["S"]): tuple(t["cell"]) for t in data["triads"]},
            approximation=approximation,
        )

    def strong_equivalence_violations(self) -> list[str]:
        """Graph-cells that straddle more than one cluster pair."""
        bad = []
        for (p, q), ids in self.pair_cells.items():
            lp, lq = self.labels[p], self.labels[q]
            for cid, (i, j) in self.cell_pair[(p, q)].items():
                rows, cols = np.nonzero(ids == cid)
                if np.any(lp[rows] != i) or np.any(lq[cols] != j):
                    bad.append(f"graph-cell {cid} on parts {(p, q)} leaves clusters {(i, j)}")
        return bad


def _cyclic_matchings(a1: int, k: int, count: int, rng: np.random.Generator) -> set[tuple]:
    """Cluster index tuples forming ``count`` random perfect matchings of the cluster k-partite set."""
    out: set[tuple] = set()
    for _ in range(count):
        perms = [np.arange(a1)] + [rng.permutation(a1) for _ in range(k - 1)]
        out.update(tuple(int(pm[j]) for pm in perms) for j in range(a1))
    return out


def plant_packing_instance(r: int = 3, k: int = 3, a1: int = 6, n1: int = 30, density: float = 0.5,
                           noise: float = 0.02, graph_cells: int = 1, triads_per_cluster: int = 2,
                           seed: int = 0, shuffle: bool = True) -> tuple[Complex, CellSystem]:
    """Planted k-graph ``G0`` on ``r`` parts of ``a1 * n1`` vertices each.

    Every chosen cluster tuple gets one dense triple-cell with inclusion
    probability ``density``; then each k-tuple of ``K(V)`` is flipped with
    probability ``noise``.  The planted (noise-free) graph is kept as
    ``cells.approximation``.
    """
    if k not in (2, 3) or r < k:
        raise ComplexError("planted instances need k in {2, 3} and r >= k")
    if not 0 < density <= 1 or not 0 <= noise < 1:
        raise ComplexError("density must lie in (0, 1] and noise in [0, 1)")
    rng = np.random.default_rng(seed)
    n = a1 * n1
    labels = {}
    for p in range(r):
        lab = np.repeat(np.arange(a1), n1)
        labels[p] = rng.permutation(lab) if shuffle else lab
    cells = CellSystem(k=k, r=r, a1=a1, n1=n1, labels=labels, graph_cells=graph_cells)
    if k == 3:
        for p, q in combinations(range(r), 2):
            local = rng.integers(graph_cells, size=(n, n))
            base = (labels[p][:, None] * a1 + labels[q][None, :]) * graph_cells
            cells.pair_cells[(p, q)] = base + local
            cells.cell_pair[(p, q)] = {(i * a1 + j) * graph_cells + g: (i, j)
                                       for i in range(a1) for j in range(a1) for g in range(graph_cells)}
    idx = IndexComplex.partite(r, k)
    ground = Ground.of([n] * r)
    planted: dict[int, np.ndarray] = {}
    observed: dict[int, np.ndarray] = {}
    for A in combinations(range(r), k):
        c = idx.copy(A)
        top = np.zeros((n,) * k, dtype=bool)
        for tup in sorted(_cyclic_matchings(a1, k, triads_per_cluster, rng)):
            S = tuple(zip(A, tup))
            cell = ()
            if k == 3:
                cell = tuple(int(rng.choice(ids)) for ids in cells.pair_cell_ids(S))
            mem = [cells.members(p, j) for p, j in S]
            keep = cells.cell_mask(S, cell) & (rng.random(tuple(m.size for m in mem)) < density)
            top[np.ix_(*mem)] |= keep
            cells.triads[S] = cell
        planted[c] = top
        observed[c] = top ^ (rng.random(top.shape) < noise)
    lower = {c: np.ones(tuple(n for _ in idx.axes(c)), dtype=bool)
             for c in idx.copies if 0 < idx.size(c) < k}
    lower.update({c: np.ones((), dtype=bool) for c in idx.copies if idx.size(c) == 0})
    cells.approximation = Complex(idx, ground, {**lower, **planted})
    return Complex(idx, ground, {**lower, **observed}), cells


def marked_approximation(G0: Complex, cells: CellSystem) -> MarkedComplex:
    """``G'`` with the planted tuples missing from ``G0`` marked forbidden."""
    Gp = cells.approximation
    if Gp is None:
        raise ComplexError("cell system carries no approximating graph")
    marks = {c: Gp.part(c) & ~G0.part(c) for c in Gp.top_copies() if Gp.index.size(c) == Gp.k}
    return MarkedComplex(Gp, {c: m for c, m in marks.items() if m.any()})
