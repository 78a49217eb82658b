"""Indexing of the target complex H for the engine."""
from __future__ import annotations

from collections import deque
from itertools import combinations

import numpy as np

from ..complex import Complex, ComplexError


class Target:
    """Vertices and nonempty simplices of H with integer ids.

    A vertex id is ``offset[part] + ordinal``.  A simplex is a sorted tuple of
    vertex ids ordered like the axes of its copy.
    """

    def __init__(self, H: Complex):
        self.H = H
        idx = H.index
        self.parts = tuple(H.ground.parts)
        self.offset = {}
        total = 0
        for p in self.parts:
            self.offset[p] = total
            total += H.ground.size(p)
        self.n_vertices = total
        self.part_of = np.empty(total, dtype=np.intp)
        self.ord_of = np.empty(total, dtype=np.intp)
        for p in self.parts:
            o = self.offset[p]
            n = H.ground.size(p)
            self.part_of[o:o + n] = p
            self.ord_of[o:o + n] = np.arange(n)
        self.simplices: list[tuple] = []
        self.copy_of: list[int] = []
        self.sid: dict[frozenset, int] = {}
        for c in sorted(H.parts, key=lambda c: (idx.size(c), c)):
            if idx.size(c) == 0:
                continue
            axes = idx.axes(c)
            for row in np.argwhere(H.parts[c]):
                verts = tuple(self.offset[p] + int(v) for p, v in zip(axes, row))
                key = frozenset(verts)
                if key in self.sid:
                    raise ComplexError(f"vertex set {verts} occurs in two copies of H")
                self.sid[key] = len(self.simplices)
                self.simplices.append(verts)
                self.copy_of.append(c)
        self.k = max((len(s) for s in self.simplices), default=0)
        self.containing: list[list[int]] = [[] for _ in range(total)]
        for s, verts in enumerate(self.simplices):
            for v in verts:
                self.containing[v].append(s)
        self.vertex_sid = np.full(total, -1, dtype=np.intp)
        for v in range(total):
            sv = self.sid.get(frozenset((v,)))
            if sv is not None:
                self.vertex_sid[v] = sv
        self.nbrs: list[tuple] = []
        for v in range(total):
            nb = set()
            for s in self.containing[v]:
                nb.update(self.simplices[s])
            nb.discard(v)
            self.nbrs.append(tuple(sorted(nb)))
        self.tops = [s for s, verts in enumerate(self.simplices) if len(verts) == self.k]
        self.tops_containing = [[s for s in self.containing[v] if len(self.simplices[s]) == self.k]
                                for v in range(total)]
        self._link: dict[int, list[tuple[int, int]]] = {}

    def vertex(self, part: int, ordinal: int) -> int:
        return self.offset[part] + int(ordinal)

    def name(self, v: int) -> tuple[int, int]:
        return int(self.part_of[v]), int(self.ord_of[v])

    def axes(self, s: int) -> tuple:
        return tuple(int(self.part_of[v]) for v in self.simplices[s])

    def find(self, verts) -> int | None:
        return self.sid.get(frozenset(verts))

    def link(self, x: int) -> list[tuple[int, int]]:
        """Pairs ``(S, S+x)`` of simplex ids with ``S`` nonempty and ``S ∪ {x} ∈ H``."""
        got = self._link.get(x)
        if got is None:
            got = []
            for s in self.containing[x]:
                verts = self.simplices[s]
                if len(verts) < 2:
                    continue
                rest = tuple(v for v in verts if v != x)
                got.append((self.sid[frozenset(rest)], s))
            got.sort(key=lambda p: (len(self.simplices[p[0]]), p[0]))
            self._link[x] = got
        return got

    def faces(self, s: int, proper: bool = False) -> list[int]:
        verts = self.simplices[s]
        out = []
        top = len(verts) - 1 if proper else len(verts)
        for m in range(1, top + 1):
            for sub in combinations(verts, m):
                out.append(self.sid[frozenset(sub)])
        return out

    def distances_from(self, x: int, limit: int) -> dict[int, int]:
        dist = {x: 0}
        queue = deque([x])
        while queue:
            u = queue.popleft()
            if dist[u] >= limit:
                continue
            for w in self.nbrs[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def max_degree(self) -> int:
        return max((len(t) for t in self.tops_containing), default=0)
