"""Seeded instance generators."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Mapping, Sequence

import numpy as np

from .complex import Complex, ComplexError, Ground, IndexComplex, MarkedComplex, from_edges

FAMILIES = ("matching", "clique-factor", "matching+clique-factor", "loose-path", "loose-cycle",
            "packing", "random")


@dataclass
class InstanceSpec:
    k: int = 2
    r: int = 3
    sizes: Sequence[int] | int = 10
    densities: Mapping[int, float] = field(default_factory=lambda: {2: 0.5})
    theta: float = 0.0
    family: str = "matching"
    family_args: dict[str, Any] = field(default_factory=dict)
    c: float = 0.0
    c_prime: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.sizes, int):
            self.sizes = [self.sizes] * self.r
        self.sizes = [int(n) for n in self.sizes]
        self.densities = {int(k): float(v) for k, v in dict(self.densities).items()}
        if len(self.sizes) != self.r or min(self.sizes, default=1) < 1:
            raise ValueError("need one positive size per part")
        for lvl, d in self.densities.items():
            if not 0 < d <= 1:
                raise ValueError(f"density at level {lvl} must lie in (0, 1]")
        if not 1 <= self.k <= self.r:
            raise ValueError("need 1 <= k <= r")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def index(self) -> IndexComplex:
        return IndexComplex.partite(self.r, self.k)

    @property
    def ground(self) -> Ground:
        return Ground.of(self.sizes)

    def to_dict(self) -> dict[str, Any]:
        return {"k": self.k, "r": self.r, "sizes": list(self.sizes),
                "densities": {str(k): v for k, v in sorted(self.densities.items())},
                "theta": self.theta, "family": self.family, "family_args": self.family_args,
                "c": self.c, "c_prime": self.c_prime, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "InstanceSpec":
        data = dict(data)
        if "densities" in data:
            data["densities"] = {int(k): v for k, v in data["densities"].items()}
        return cls(**data)


def _rng(seed: int | np.random.Generator) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def gen_regular_complex(spec: InstanceSpec, seed: int | np.random.Generator | None = None,
                        index: IndexComplex | None = None) -> Complex:
    """Level by level, keep each star-set tuple independently with that level's density."""
    rng = _rng(spec.seed if seed is None else seed)
    idx = index or spec.index
    ground = spec.ground
    parts: dict[int, np.ndarray] = {}
    for c in sorted(idx.copies, key=lambda c: (idx.size(c), c)):
        m = idx.size(c)
        shape = tuple(ground.size(p) for p in idx.axes(c))
        if m <= 1:
            parts[c] = np.ones(shape, dtype=bool)
            continue
        star = np.ones(shape, dtype=bool)
        for d in idx.strict_below(c):
            if idx.size(d) >= 1:
                star &= _lift_from(parts[d], idx, d, c)
        dens = spec.densities.get(m, 1.0)
        parts[c] = star & (rng.random(shape) < dens) if dens < 1 else star
    return Complex(idx, ground, parts)


def balanced_bipartite(n: int, d: float, slack: int = 2, seed: int | np.random.Generator = 0) -> Complex:
    """Random bipartite 2-complex on two parts of size ``n`` with every degree within ``slack`` of ``d n``.

    Starts from ``G(n, n, d)`` and moves edges inside a column from a heavy
    row to a light row (column degrees unchanged), then does the same with
    rows and columns swapped.  Each phase leaves the other side's degrees
    alone, so both end up balanced while the graph stays otherwise random.
    """
    rng = _rng(seed)
    adj = rng.random((n, n)) < d
    target = d * n

    def settle(a: np.ndarray) -> None:
        deg = a.sum(axis=1)
        while True:
            hi = np.flatnonzero(deg > target + slack)
            lo = np.flatnonzero(deg < target - slack)
            if hi.size == 0 and lo.size == 0:
                return
            if hi.size == 0:
                hi = np.flatnonzero(deg > target)
            if lo.size == 0:
                lo = np.flatnonzero(deg < target)
            if hi.size == 0 or lo.size == 0:
                return
            h, l = int(rng.choice(hi)), int(rng.choice(lo))
            cols = np.flatnonzero(a[h] & ~a[l])
            j = int(rng.choice(cols))
            a[h, j], a[l, j] = False, True
            deg[h] -= 1
            deg[l] += 1

    settle(adj)
    settle(adj.T)
    idx = IndexComplex.partite(2, 2)
    parts = {0: np.ones(n, dtype=bool), 1: np.ones(n, dtype=bool), idx.copy(()): np.ones((), dtype=bool),
             idx.copy((0, 1)): adj}
    return Complex(idx, Ground.of([n, n]), parts)


def _lift_from(arr: np.ndarray, idx: IndexComplex, d: int, c: int) -> np.ndarray:
    pos = {p: a for a, p in enumerate(idx.axes(c))}
    shape = [1] * idx.size(c)
    for p, n in zip(idx.axes(d), arr.shape):
        shape[pos[p]] = n
    return arr.reshape(shape)


def gen_marks(G: Complex, theta: float, seed: int | np.random.Generator = 0) -> MarkedComplex:
    """Mark every top-level edge independently with probability ``theta``."""
    rng = _rng(seed)
    marks = {}
    for c in G.top_copies():
        arr = G.part(c)
        if theta <= 0:
            continue
        marks[c] = arr & (rng.random(arr.shape) < theta) if theta < 1 else arr.copy()
    return MarkedComplex(G, marks)


def edges_complex(idx: IndexComplex, sizes: Sequence[int], edges: list[tuple]) -> Complex:
    """Downward closure of edges given as tuples of (part, ordinal)."""
    by_copy: dict[int, list[tuple]] = {p: [(o,) for o in range(n)] for p, n in enumerate(sizes)}
    for e in edges:
        e = tuple(sorted(e))
        c = idx.copy(tuple(p for p, _ in e))
        by_copy.setdefault(c, []).append(tuple(o for _, o in e))
    return from_edges(idx, list(sizes), by_copy)


def _degree(H: Complex) -> int:
    k = H.k
    best = 0
    for p in H.ground.parts:
        deg = np.zeros(H.ground.size(p), dtype=np.int64)
        for c in H.top_copies():
            if p in H.index.axes(c) and H.index.size(c) == k:
                axes = H.index.axes(c)
                a = axes.index(p)
                deg += H.part(c).sum(axis=tuple(i for i in range(len(axes)) if i != a)) if len(axes) > 1 else H.part(c)
        best = max(best, int(deg.max(initial=0)))
    return best


def max_degree(H: Complex) -> int:
    """Largest number of top-level simplices through one vertex."""
    return _degree(H)


@dataclass
class GeneratedTarget:
    H: Complex
    degree: int
    leftovers: dict[int, int]
    family: str


def gen_target(family: str, sizes: Sequence[int], seed: int | np.random.Generator = 0, k: int = 2,
               r: int | None = None, D: int = 3, **kw: Any) -> GeneratedTarget:
    """A bounded-degree spanning target complex from a named family."""
    rng = _rng(seed)
    r = len(sizes) if r is None else r
    sizes = [int(n) for n in sizes]
    if len(sizes) != r:
        raise ComplexError("need one size per part")
    idx = kw.pop("index", None) or IndexComplex.partite(r, k)
    perm = {p: rng.permutation(n) for p, n in enumerate(sizes)}
    used = {p: 0 for p in range(r)}

    def take(p: int) -> int:
        v = int(perm[p][used[p]])
        used[p] += 1
        return v

    edges: list[tuple] = []
    if family in ("matching", "matching+clique-factor"):
        edges += _matching(sizes, k, rng)
    if family in ("clique-factor", "matching+clique-factor"):
        size = kw.get("clique", r)
        if size < k or size > r:
            raise ComplexError("clique size must lie between k and r")
        if size == r and len(set(sizes)) != 1:
            raise ComplexError("clique factor needs equal part sizes")
        groups = [tuple(range(r))] if size == r else [tuple(range(i, i + size)) for i in range(0, r - size + 1, size)]
        for grp in groups:
            for _ in range(min(sizes[p] for p in grp)):
                verts = [(p, take(p)) for p in grp]
                edges += [tuple(e) for e in combinations(verts, k)]
    elif family in ("loose-path", "loose-cycle"):
        edges += _loose(sizes, k, rng, cycle=family == "loose-cycle")
    elif family == "packing":
        edges += _packing(sizes, k, kw.get("F", (1, 1, 2)), kw.get("counts"), rng)
    elif family == "random":
        edges += _random_bounded(sizes, k, D, rng, kw.get("attempts", 20))
    elif family not in FAMILIES:
        raise ComplexError(f"unknown family {family!r}")
    H = edges_complex(idx, sizes, edges)
    covered = {p: set() for p in range(r)}
    for e in edges:
        for p, o in e:
            covered[p].add(o)
    left = {p: sizes[p] - len(covered[p]) for p in range(r)}
    return GeneratedTarget(H, _degree(H), left, family)


def _matching(sizes: Sequence[int], k: int, rng: np.random.Generator) -> list[tuple]:
    """Disjoint k-edges covering every part, spread over the r cyclic windows of k parts."""
    r = len(sizes)
    if len(set(sizes)) != 1:
        raise ComplexError("matching needs equal part sizes")
    n = sizes[0]
    groups = [tuple(range(r))] if r == k else [tuple(sorted((g + j) % r for j in range(k))) for g in range(r)]
    # every part sits in k windows, so each window takes n // k vertices per part
    share = n if r == k else n // k
    perm = {p: list(rng.permutation(n)) for p in range(r)}
    edges = []
    for grp in groups:
        for _ in range(share):
            edges.append(tuple((p, int(perm[p].pop())) for p in grp))
    return edges


def _loose(sizes: Sequence[int], k: int, rng: np.random.Generator, cycle: bool) -> list[tuple]:
    r = len(sizes)
    perm = {p: list(rng.permutation(n)) for p, n in enumerate(sizes)}
    seq = []
    j = 0
    while perm[j % r]:
        seq.append((j % r, int(perm[j % r].pop())))
        j += 1
    step = k - 1
    edges = []
    i = 0
    while i + k <= len(seq):
        e = seq[i:i + k]
        if len({p for p, _ in e}) == k:
            edges.append(tuple(e))
        i += step
    if cycle and len(seq) > k and edges:
        tail = seq[i:] + seq[:1]
        if len(tail) == k and len({p for p, _ in tail}) == k:
            edges.append(tuple(tail))
    return edges


def _packing(sizes: Sequence[int], k: int, F: Sequence[int], counts: Mapping[tuple, int] | None,
             rng: np.random.Generator) -> list[tuple]:
    """Vertex-disjoint complete partite copies of F; class i of copy goes to part perm[i]."""
    r = len(sizes)
    if len(F) != r:
        raise ComplexError("F needs one class per part")
    if counts is None:
        n = min(sizes[p] // F[p] for p in range(r) if F[p])
        counts = {tuple(range(r)): n}
    perm = {p: list(rng.permutation(n)) for p, n in enumerate(sizes)}
    edges = []
    for pi, cnt in sorted(counts.items()):
        for _ in range(cnt):
            classes = []
            for i, p in enumerate(pi):
                if len(perm[p]) < F[i]:
                    raise ComplexError(f"part {p} too small for the requested copies")
                classes.append([(p, int(perm[p].pop())) for _ in range(F[i])])
            for parts in combinations(range(r), k):
                for pick in _product([classes[i] for i in parts]):
                    edges.append(tuple(pick))
    return edges


def _product(lists: list[list]) -> list[tuple]:
    out = [()]
    for lst in lists:
        out = [t + (v,) for t in out for v in lst]
    return out


def _random_bounded(sizes: Sequence[int], k: int, D: int, rng: np.random.Generator, attempts: int) -> list[tuple]:
    r = len(sizes)
    deg = {(p, o): 0 for p in range(r) for o in range(sizes[p])}
    seen = set()
    edges = []
    fails = 0
    target = sum(sizes) * D // k
    while fails < attempts * target and len(edges) < target:
        parts = sorted(rng.choice(r, size=k, replace=False).tolist())
        e = tuple((p, int(rng.integers(sizes[p]))) for p in parts)
        if e in seen or any(deg[v] >= D for v in e):
            fails += 1
            continue
        seen.add(e)
        edges.append(e)
        for v in e:
            deg[v] += 1
    return edges


def gen_restrictions(H: Complex, G: Complex, c: float, c_prime: float,
                     seed: int | np.random.Generator = 0) -> dict[tuple, np.ndarray]:
    """Restrict ``floor(c |X_i|)`` random vertices per part to a random ``c_prime`` share of their part."""
    rng = _rng(seed)
    out = {}
    if c <= 0:
        return out
    for p in H.ground.parts:
        n = H.ground.size(p)
        cnt = int(np.floor(c * n + 1e-9))
        for o in sorted(rng.choice(n, size=cnt, replace=False).tolist()):
            m = G.ground.size(p)
            keep = int(np.floor(c_prime * m)) + 1
            allowed = np.zeros(m, dtype=bool)
            allowed[rng.choice(m, size=min(keep, m), replace=False)] = True
            out[((p, int(o)),)] = allowed
    return out


def build_instance(spec: InstanceSpec) -> dict[str, Any]:
    """Complex, marks, target and restrictions for one spec, each from its own seed stream."""
    ss = np.random.SeedSequence(spec.seed)
    s_g, s_m, s_h, s_r = (np.random.default_rng(s) for s in ss.spawn(4))
    G = gen_regular_complex(spec, s_g)
    GM = gen_marks(G, spec.theta, s_m)
    args = dict(spec.family_args)
    D = args.pop("D", 3)
    tgt = gen_target(spec.family, spec.sizes, s_h, k=spec.k, r=spec.r, D=D, **args)
    gamma = gen_restrictions(tgt.H, G, spec.c, spec.c_prime, s_r)
    return {"G": GM, "H": tgt.H, "gamma": gamma, "degree": tgt.degree, "leftovers": tgt.leftovers}


def plant_packing_instance(*args: Any, **kw: Any):
    """Planted cluster instance for the packing pipeline; see ``blowup.packing.cells``."""
    from .packing.cells import plant_packing_instance as plant
    return plant(*args, **kw)
