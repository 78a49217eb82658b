"""Weighted reduced graph on clusters, and trimming of over-marked clusters."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..complex import MarkedComplex
from .cells import CellSystem, Cluster


@dataclass
class ReducedGraph:
    """Clusters ``Z`` and weighted edges (cluster tuples, one cluster per part)."""

    k: int
    Z: frozenset
    weights: dict[tuple, Fraction]
    good: dict[tuple, int] = field(default_factory=dict)
    marked: dict[tuple, int] = field(default_factory=dict)
    trimmed: frozenset = frozenset()

    @property
    def edges(self) -> list[tuple]:
        return sorted(self.weights)

    def weighted_degree(self, z: Cluster) -> Fraction:
        return sum((w for S, w in self.weights.items() if z in S), Fraction(0))

    def restrict(self, keep) -> "ReducedGraph":
        keep = frozenset(keep)
        w = {S: v for S, v in self.weights.items() if all(z in keep for z in S)}
        return ReducedGraph(self.k, keep, w, self.good, self.marked, self.trimmed | (self.Z - keep))


def _block_counts(arr: np.ndarray, hots: list[np.ndarray]) -> np.ndarray:
    """Sum of ``arr`` over every block of the cluster partitions on its axes."""
    out = arr.astype(np.int64)
    for ax, h in enumerate(hots):
        out = np.moveaxis(np.tensordot(out, h, axes=([ax], [0])), -1, ax)
    return out


def cluster_counts(GM: MarkedComplex, cells: CellSystem) -> tuple[dict[tuple, int], dict[tuple, int]]:
    """Exact ``|G'[S']_S|`` and ``|M[S']_S|`` for every cluster tuple ``S``."""
    G = GM.complex
    idx = G.index
    good: dict[tuple, int] = {}
    marked: dict[tuple, int] = {}
    for A in cells.part_tuples:
        c = idx.copy(A)
        hots = [cells.one_hot(p) for p in idx.axes(c)]
        gc = _block_counts(G.part(c), hots)
        mc = _block_counts(GM.mark(c), hots)
        for tup in np.ndindex(*gc.shape):
            S = tuple(zip(A, (int(t) for t in tup)))
            good[S] = int(gc[tup])
            marked[S] = int(mc[tup])
    return good, marked


def _complete_size(cells: CellSystem, S: tuple) -> int:
    return int(np.prod([cells.members(p, j).size for p, j in S]))


def build_reduced(GM: MarkedComplex, cells: CellSystem, d3: float, nu: float) -> ReducedGraph:
    """Keep cluster tuples that are dense in ``G'`` and lightly marked.

    Weight is ``|G'[S']_S| / N`` with ``N = n^(k-1) n1`` and ``n`` the total
    number of vertices.
    """
    good, marked = cluster_counts(GM, cells)
    n = sum(GM.complex.ground.size(p) for p in GM.complex.ground.parts)
    N = n ** (cells.k - 1) * cells.n1
    root = nu ** 0.5
    weights = {}
    for S in good:
        full = _complete_size(cells, S)
        if good[S] > d3 * full and marked[S] < root * full:
            weights[S] = Fraction(good[S], N)
    return ReducedGraph(cells.k, frozenset(cells.clusters()), weights, good, marked)


def over_marked(R: ReducedGraph, cells: CellSystem, nu: float) -> dict[tuple, list[tuple]]:
    """For each (cluster, part tuple) the cluster tuples whose mark count is too high."""
    root = nu ** 0.5
    out: dict[tuple, list[tuple]] = {}
    for S, m in R.marked.items():
        if m > root * _complete_size(cells, S):
            A = tuple(p for p, _ in S)
            for z in S:
                out.setdefault((z, A), []).append(S)
    return out


def trim_reduced(R: ReducedGraph, cells: CellSystem, nu: float) -> ReducedGraph:
    """Drop clusters lying in more than ``nu^(1/4) a1^(k-1)`` over-marked tuples of one part tuple."""
    limit = nu ** 0.25 * cells.a1 ** (cells.k - 1)
    bad = {z for (z, _), lst in over_marked(R, cells, nu).items() if len(lst) > limit}
    return R.restrict(R.Z - bad)

