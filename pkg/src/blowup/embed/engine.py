"""Randomized greedy embedding of a bounded-degree complex H into a marked complex (G, M).

One run keeps a free set F_S for every simplex S of H and, for every top-level
edge E of H, the marked part of the free set of its unembedded vertices.  After
x is mapped to y, sets through x are pinned to y, sets meeting the vertex
neighbourhood of x are cut down by the slices F_{Ax}(y), and every other set only
loses y, which is applied lazily from a shared log.
"""
from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Mapping, Sequence

import numpy as np

from ..complex import Complex, MarkedComplex, _lift
from .config import ParamConfig
from .sdr import hall_witness, hopcroft_karp
from .target import Target

Name = tuple  # (part, ordinal)


class HypothesisError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class BufferInfeasible(ValueError):
    def __init__(self, part: int, chosen: int, wanted: int):
        super().__init__(f"part {part}: only {chosen} of {wanted} buffer vertices fit")
        self.part = part


class EngineBug(RuntimeError):
    pass


@dataclass
class Failure:
    stage: str
    t: int
    witness: dict[str, Any]
    telemetry: "Telemetry | None" = None

    ok = False

    def to_dict(self) -> dict[str, Any]:
        return {"stage": self.stage, "t": self.t, "witness": _jsonable(self.witness)}


@dataclass
class Embedding:
    phi: dict[int, np.ndarray]
    telemetry: "Telemetry | None" = None
    T: int = 0

    ok = True

    def image(self, part: int, ordinal: int) -> int:
        return int(self.phi[part][ordinal])

    def to_dict(self) -> dict[str, Any]:
        return {"phi": {str(p): [int(v) for v in arr] for p, arr in sorted(self.phi.items())}, "T": self.T}


@dataclass
class Telemetry:
    free_ratio: list[float] = field(default_factory=list)
    queue_sizes: list[int] = field(default_factory=list)
    jumper_sizes: list[int] = field(default_factory=list)
    good_fraction: list[float] = field(default_factory=list)
    marked_fraction: list[float] = field(default_factory=list)
    regularity: list[tuple[int, float]] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    unused_min: list[int] = field(default_factory=list)

    def summary(self) -> dict[str, Any]:
        def mean(xs):
            return float(np.mean(xs)) if xs else None
        return {"steps": len(self.good_fraction), "good_fraction_mean": mean(self.good_fraction),
                "good_fraction_min": float(min(self.good_fraction)) if self.good_fraction else None,
                "queue_max": max(self.queue_sizes, default=0), "jumpers_max": max(self.jumper_sizes, default=0),
                "regularity_max": max((d for _, d in self.regularity), default=None)}


class FreeState:
    """Free sets per simplex id plus marked subsets per top-level edge id."""

    def __init__(self, target: Target, arrays: list[np.ndarray]):
        self.target = target
        self.F = arrays
        self.lazy = [len(s) > 1 for s in target.simplices]
        self.ptr = [0] * len(arrays)
        self.log: list[tuple[int, int, int]] = []
        self.marks: dict[int, np.ndarray] = {}
        self.mark_verts: dict[int, tuple] = {}
        self.touched = [0] * len(arrays)

    def current(self, s: int) -> np.ndarray:
        """F_S at the present time, applying pending deletions."""
        p0 = self.ptr[s]
        if self.lazy[s] and p0 < len(self.log):
            verts = self.target.simplices[s]
            axes = self.target.axes(s)
            arr = self.F[s]
            for part, y, x in self.log[p0:]:
                if part in axes:
                    a = axes.index(part)
                    if verts[a] != x:
                        idx = [slice(None)] * arr.ndim
                        idx[a] = y
                        arr[tuple(idx)] = False
            self.ptr[s] = len(self.log)
        return self.F[s]

    def size(self, s: int) -> int:
        return int(self.current(s).sum())

    def snapshot(self) -> tuple[dict[tuple, np.ndarray], dict[tuple, np.ndarray]]:
        """Free sets and marked subsets keyed by tuples of vertex names."""
        tg = self.target
        F = {tuple(tg.name(v) for v in tg.simplices[s]): self.current(s).copy() for s in range(len(self.F))}
        M = {tuple(tg.name(v) for v in tg.simplices[e]): m.copy() for e, m in self.marks.items()}
        return F, M


class NuLedger:
    """Embedded-neighbour counts nu_x and the accumulated constants K_S."""

    def __init__(self, target: Target, k: int):
        self.target = target
        self.k = k
        self.nu = np.zeros(target.n_vertices, dtype=np.int64)
        self.K: dict[frozenset, int] = {}

    def prime(self, S: frozenset, bump: frozenset = frozenset(), K: Mapping[frozenset, int] | None = None) -> int:
        base = int(sum(int(self.nu[v]) for v in S)) + sum(1 for v in S if v in bump)
        if len(S) == self.k:
            return base
        kk = (K or {}).get(S, self.K.get(S, 0))
        return base + kk

    def preview(self, x: int) -> tuple[frozenset, dict[frozenset, int]]:
        bump = frozenset(self.target.nbrs[x])
        over = {}
        for S in self._link_sets(x):
            over[S] = max(self.K.get(S, 0), self.prime(S | {x}, bump))
        return bump, over

    def commit(self, x: int) -> dict[frozenset, int]:
        bump, over = self.preview(x)
        for v in bump:
            self.nu[v] += 1
        self.K.update(over)
        return over

    def _link_sets(self, x: int) -> list[frozenset]:
        tg = self.target
        return [frozenset()] + [frozenset(tg.simplices[s]) for s, _ in tg.link(x)]


@dataclass
class EmbeddingState:
    t: int
    phi: np.ndarray  # image ordinal per H vertex id, -1 if unembedded
    used: dict[int, np.ndarray]
    L: list[int]
    queue: deque
    queued: set
    Q_count: dict[int, int]
    jumpers: list[int]
    buffer: frozenset
    N: frozenset
    regime: np.ndarray
    embedded_at: np.ndarray
    ledger: NuLedger
    T: int | None = None
    failure: Failure | None = None


@dataclass
class Run:
    target: Target
    GM: MarkedComplex
    gamma: dict | None
    cfg: ParamConfig
    free: FreeState
    state: EmbeddingState
    telemetry: Telemetry
    transcript: list[dict]
    rng: np.random.Generator
    part_vertices: dict[int, np.ndarray]

    @property
    def G(self) -> Complex:
        return self.GM.complex


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        seq = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [_jsonable(v) for v in seq]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


# ----------------------------------------------------------------------------
# hypotheses and initial free sets


def gamma_sets(gamma: Mapping | None) -> dict[tuple, np.ndarray]:
    """Normalise restricted positions to ``{sorted vertex names: bool array}``."""
    out = {}
    for key, arr in (gamma or {}).items():
        if isinstance(key, tuple) and len(key) == 2 and all(isinstance(v, (int, np.integer)) for v in key):
            key = (key,)
        out[tuple(sorted(tuple(int(a) for a in v) for v in key))] = np.asarray(arr, dtype=bool)
    return out


def restricted_vertices(gamma: Mapping | None) -> set[Name]:
    return {v for key in gamma_sets(gamma) for v in key}


def check_hypotheses(H: Complex, GM: MarkedComplex, gamma: Mapping | None, cfg: ParamConfig) -> list[str]:
    G = GM.complex
    problems = []
    if H.index != G.index:
        problems.append("H and G use different index complexes")
        return problems
    for p in H.ground.parts:
        if H.ground.size(p) != G.ground.size(p):
            problems.append(f"part {p}: |X|={H.ground.size(p)} but |V|={G.ground.size(p)}")
    if problems:
        return problems
    for c in sorted(H.parts):
        if c not in G.parts:
            problems.append(f"G part {H.index.subset(c)} (copy {c}) is undefined but H needs it")
    for p in G.ground.parts:
        if p in G.parts and not G.parts[p].all():
            problems.append(f"G part {p} does not span its ground part")
    gs = gamma_sets(gamma)
    if gs:
        tg = Target(H)
        star = restricted_vertices(gamma)
        for p in H.ground.parts:
            cnt = sum(1 for q, _ in star if q == p)
            if cnt > cfg.c * H.ground.size(p) + 1e-9:
                problems.append(f"part {p}: {cnt} restricted vertices exceed c|X_i|")
        for key, arr in gs.items():
            s = tg.find(tg.vertex(*v) for v in key)
            if s is None:
                problems.append(f"restriction on {key} which is not a simplex of H")
                continue
            c = tg.copy_of[s]
            if arr.shape != G.shape(c):
                problems.append(f"restriction on {key} has shape {arr.shape}")
                continue
            if np.any(arr & ~G.part(c)):
                problems.append(f"restriction on {key} is not inside G")
            num = int(arr.sum())
            sub_star = np.ones(arr.shape, dtype=bool)
            verts = tg.simplices[s]
            for m in range(1, len(verts)):
                for sub in combinations(verts, m):
                    kk = tuple(sorted(tg.name(v) for v in sub))
                    d = tg.find(sub)
                    lower = gs.get(kk, G.part(tg.copy_of[d]))
                    sub_star &= _lift(lower, tg.axes(d), tg.axes(s))
            g_star = np.ones(arr.shape, dtype=bool)
            for d in G.index.strict_below(c):
                if d in G.parts:
                    g_star &= G.lifted(d, c)
            den, gden = int(sub_star.sum()), int(g_star.sum())
            dg = G.count(c) / gden if gden else 0.0
            if den == 0 or num / den <= cfg.c_prime * dg:
                problems.append(f"restriction on {key} breaches the density floor c'")
    return problems


def initial_free_sets(target: Target, G: Complex, gamma: Mapping | None) -> list[np.ndarray]:
    """F_S(0) = G[Gamma]_S for every simplex S of H."""
    gs = gamma_sets(gamma)
    by_sid = {}
    for key, arr in gs.items():
        s = target.find(target.vertex(*v) for v in key)
        if s is not None:
            by_sid[s] = arr
    out = []
    for s, verts in enumerate(target.simplices):
        arr = G.part(target.copy_of[s]).copy()
        if by_sid:
            for m in range(1, len(verts) + 1):
                for sub in combinations(verts, m):
                    d = target.find(sub)
                    g = by_sid.get(d)
                    if g is not None:
                        arr &= _lift(g, target.axes(d), target.axes(s))
        out.append(np.ascontiguousarray(arr))
    return out


# ----------------------------------------------------------------------------
# buffer and list


def select_buffer(H: Complex | Target, cfg: ParamConfig, restricted: set[Name] | None = None,
                  seed: int | np.random.Generator = 0) -> list[int]:
    """Greedy seeded choice of buffer vertex ids at pairwise distance >= cfg.distance."""
    tg = H if isinstance(H, Target) else Target(H)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    blocked = np.zeros(tg.n_vertices, dtype=bool)
    for name in restricted or ():
        v = tg.vertex(*name)
        blocked[v] = True
        blocked[list(tg.nbrs[v])] = True
    order = rng.permutation(tg.n_vertices)
    queues = {p: deque(int(v) for v in order if tg.part_of[v] == p) for p in tg.parts}
    quota = {p: int(np.floor(cfg.buffer_fraction * tg.H.ground.size(p) + 1e-9)) for p in tg.parts}
    got = {p: 0 for p in tg.parts}
    chosen: list[int] = []
    reach = max(cfg.distance - 1, 0)
    while True:
        pending = [p for p in tg.parts if got[p] < quota[p]]
        if not pending:
            break
        for p in pending:
            q = queues[p]
            while q and blocked[q[0]]:
                q.popleft()
            if not q:
                raise BufferInfeasible(p, got[p], quota[p])
            v = q.popleft()
            chosen.append(v)
            got[p] += 1
            for w in tg.distances_from(v, reach):
                blocked[w] = True
    return chosen


def _list_order(tg: Target, buffer: Sequence[int], cfg: ParamConfig, rng: np.random.Generator) -> tuple[list[int], frozenset]:
    bset = set(buffer)
    L: list[int] = []
    seen = set(bset)
    for b in buffer:
        for v in tg.nbrs[b]:
            if v not in seen:
                seen.add(v)
                L.append(v)
    N = frozenset(L)
    rest = [v for v in range(tg.n_vertices) if v not in seen]
    if cfg.list_order == "random":
        rest = [rest[i] for i in rng.permutation(len(rest))]
    elif cfg.list_order == "bfs":
        left = set(rest)
        ordered = []
        for root in rest:
            if root not in left:
                continue
            left.discard(root)
            queue = deque([root])
            while queue:
                u = queue.popleft()
                ordered.append(u)
                for w in tg.nbrs[u]:
                    if w in left:
                        left.discard(w)
                        queue.append(w)
        rest = ordered
    L.extend(rest)
    L.extend(buffer)
    return L, N


def init_state(H: Complex, GM: MarkedComplex, gamma: Mapping | None, buffer: Sequence[int] | None,
               cfg: ParamConfig, seed: int = 0, check: bool = True) -> Run:
    if check:
        problems = check_hypotheses(H, GM, gamma, cfg)
        if problems:
            raise HypothesisError(problems)
    ss = np.random.SeedSequence(seed)
    buf_seq, order_seq, choice_seq = ss.spawn(3)
    tg = Target(H)
    if buffer is None:
        buffer = select_buffer(tg, cfg, restricted_vertices(gamma), np.random.default_rng(buf_seq))
    G = GM.complex
    free = FreeState(tg, initial_free_sets(tg, G, gamma))
    k = G.k
    tops = [s for s, verts in enumerate(tg.simplices) if len(verts) == k]
    for e in tops:
        c = tg.copy_of[e]
        m = GM.marks.get(c)
        if m is None:
            continue
        arr = m & free.F[e]
        if arr.any():
            free.marks[e] = arr.copy()
            free.mark_verts[e] = tg.simplices[e]
    L, N = _list_order(tg, list(buffer), cfg, np.random.default_rng(order_seq))
    regime = np.array([int(free.F[tg.vertex_sid[v]].sum()) if tg.vertex_sid[v] >= 0 else 0
                       for v in range(tg.n_vertices)], dtype=np.int64)
    state = EmbeddingState(
        t=0, phi=np.full(tg.n_vertices, -1, dtype=np.int64),
        used={p: np.zeros(G.ground.size(p), dtype=bool) for p in G.ground.parts},
        L=L, queue=deque(), queued=set(), Q_count={p: 0 for p in tg.parts}, jumpers=[],
        buffer=frozenset(buffer), N=N, regime=regime,
        embedded_at=np.zeros(tg.n_vertices, dtype=np.int64), ledger=NuLedger(tg, k))
    part_vertices = {p: np.flatnonzero(tg.part_of == p) for p in tg.parts}
    return Run(tg, GM, gamma, cfg, free, state, Telemetry(), [], np.random.default_rng(choice_seq), part_vertices)


# ----------------------------------------------------------------------------
# selection


def select_next(run: Run) -> int:
    st, tg = run.state, run.target
    if st.jumpers:
        x = min(st.jumpers)
        st.jumpers.remove(x)
        _drop(run, x)
        return x
    while st.queue and st.phi[st.queue[0]] >= 0:
        st.queue.popleft()
    if st.queue:
        xq = st.queue[0]
        near = tg.distances_from(xq, run.cfg.jump_distance)
        hubs = sorted((d, b) for b, d in near.items() if b in st.buffer)
        for _, b in hubs:
            todo = [v for v in tg.nbrs[b] if st.phi[v] < 0]
            if not todo:
                continue
            x = xq if xq in todo else todo[0]
            st.jumpers.extend(v for v in todo if v != x)
            _drop(run, x)
            return x
        _drop(run, xq)
        return xq
    for x in st.L:
        if st.phi[x] < 0:
            _drop(run, x)
            return x
    raise EngineBug("nothing left to select")


def _drop(run: Run, x: int) -> None:
    st = run.state
    if x in st.queued:
        try:
            st.queue.remove(x)
        except ValueError:
            pass
    if x in st.jumpers:
        st.jumpers.remove(x)


# ----------------------------------------------------------------------------
# candidate evaluation


def _slab(arr: np.ndarray, axis: int, cand: np.ndarray) -> np.ndarray:
    return np.moveaxis(arr, axis, 0)[cand]


def _lift_batch(arr: np.ndarray, sub_axes: Sequence[int], full_axes: Sequence[int]) -> np.ndarray:
    shape = [arr.shape[0]] + [1] * len(full_axes)
    pos = {p: a for a, p in enumerate(full_axes)}
    for p, n in zip(sub_axes, arr.shape[1:]):
        shape[1 + pos[p]] = n
    return arr.reshape(shape)


def hypothetical(run: Run, s: int, x: int, cand: np.ndarray) -> np.ndarray:
    """F_S(t) for each candidate image of x, stacked on a leading axis (x not in S)."""
    tg, free = run.target, run.free
    p = int(tg.part_of[x])
    verts = tg.simplices[s]
    axes = tg.axes(s)
    m = len(cand)
    res = np.broadcast_to(free.current(s), (m,) + free.F[s].shape).copy()
    pool = [v for v in verts if tg.part_of[v] != p]
    for size in range(1, len(pool) + 1):
        for A in combinations(pool, size):
            ax_sid = tg.find(A + (x,))
            if ax_sid is None:
                continue
            ax_axes = tg.axes(ax_sid)
            sl = _slab(free.current(ax_sid), ax_axes.index(p), cand)
            res &= _lift_batch(sl, [q for q in ax_axes if q != p], axes)
    if p in axes:
        view = np.moveaxis(res, 1 + axes.index(p), 1)
        view[np.arange(m), cand] = False
    return res


def _star_count(run: Run, s: int) -> int:
    tg, free = run.target, run.free
    verts = tg.simplices[s]
    if len(verts) == 1:
        return run.G.ground.size(int(tg.part_of[verts[0]]))
    acc = np.ones(free.F[s].shape, dtype=bool)
    for d in tg.faces(s, proper=True):
        acc &= _lift(free.current(d), tg.axes(d), tg.axes(s))
    return int(acc.sum())


@dataclass
class GoodSet:
    candidates: np.ndarray
    ok: np.ndarray
    exceptional: int
    dangerous: int
    nu_touched: dict[tuple, int]

    @property
    def members(self) -> np.ndarray:
        return self.candidates[self.ok]


def good_set(run: Run, x: int) -> GoodSet:
    tg, free, st, cfg = run.target, run.free, run.state, run.cfg
    p = int(tg.part_of[x])
    cand = np.flatnonzero(free.current(tg.vertex_sid[x]))
    m = len(cand)
    ok = np.ones(m, dtype=bool)
    if m == 0:
        return GoodSet(cand, ok, 0, 0, {})
    bump, over = st.ledger.preview(x)
    touched: dict[tuple, int] = {}
    for s, sx in tg.link(x):
        verts = tg.simplices[s]
        if any(st.phi[v] >= 0 for v in verts):
            continue
        S = frozenset(verts)
        nup = st.ledger.prime(S, bump, over)
        touched[verts] = nup
        eps = cfg.eps_at(nup, 0)
        sx_axes = tg.axes(sx)
        slab = _slab(free.current(sx), sx_axes.index(p), cand)
        cnt = slab.reshape(m, -1).sum(axis=1)
        if len(verts) == 1:
            star = np.full(m, run.G.ground.size(int(tg.part_of[verts[0]])), dtype=np.int64)
        else:
            axes = tg.axes(s)
            acc = np.ones((m,) + free.F[s].shape, dtype=bool)
            for sub in range(1, len(verts)):
                for A in combinations(verts, sub):
                    a_x = tg.find(A + (x,))
                    a_axes = tg.axes(a_x)
                    sl = _slab(free.current(a_x), a_axes.index(p), cand)
                    acc &= _lift_batch(sl, [q for q in a_axes if q != p], axes)
            star = acc.reshape(m, -1).sum(axis=1)
        star_s, star_sx = _star_count(run, s), _star_count(run, sx)
        if star_s == 0 or star_sx == 0:
            ok[:] = False
            continue
        target_d = (free.size(s) / star_s) * (free.size(sx) / star_sx)
        with np.errstate(divide="ignore", invalid="ignore"):
            d_now = np.where(star > 0, cnt / np.maximum(star, 1), np.nan)
        good = (star > 0) & (np.abs(d_now - target_d) <= eps * target_d)
        if target_d == 0:
            good[:] = False
        ok &= good
    n_exc = int((~ok).sum())
    danger = np.zeros(m, dtype=bool)
    if free.marks:
        for e in _touched_edges(run, x):
            rest = free.mark_verts[e]
            mt = free.marks[e]
            if x in rest:
                a = rest.index(x)
                after = tuple(v for v in rest if v != x)
                mcnt = _slab(mt, a, cand).reshape(m, -1).sum(axis=1)
                if after:
                    r_sid = tg.find(rest)
                    fcnt = _slab(free.current(r_sid), a, cand).reshape(m, -1).sum(axis=1)
                else:
                    fcnt = np.ones(m, dtype=np.int64)
            else:
                after = rest
                hyp = hypothetical(run, tg.find(rest), x, cand)
                fcnt = hyp.reshape(m, -1).sum(axis=1)
                mcnt = (hyp & mt[None]).reshape(m, -1).sum(axis=1)
            nup = st.ledger.prime(frozenset(after), bump, over)
            danger |= mcnt > cfg.theta_at(nup) * fcnt
    ok &= ~danger
    return GoodSet(cand, ok, n_exc, int(danger.sum()), touched)


def _touched_edges(run: Run, x: int) -> list[int]:
    tg, free = run.target, run.free
    out = set()
    for v in (x,) + tuple(tg.nbrs[x]):
        if run.state.phi[v] >= 0:
            continue
        for e in tg.tops_containing[v]:
            if e in free.marks and v in free.mark_verts[e]:
                out.add(e)
    return sorted(out)


# ----------------------------------------------------------------------------
# the update


def _local_sets(run: Run, x: int) -> list[int]:
    tg = run.target
    through_x = set(tg.containing[x])
    out = set()
    for z in tg.nbrs[x]:
        out.update(s for s in tg.containing[z] if s not in through_x)
    return sorted(out)


def apply_embedding(run: Run, x: int, y: int) -> None:
    tg, free, st = run.target, run.free, run.state
    p = int(tg.part_of[x])
    if st.phi[x] >= 0:
        raise EngineBug(f"vertex {x} embedded twice")
    if not free.current(tg.vertex_sid[x])[y] or st.used[p][y]:
        raise EngineBug(f"image {y} is not free for vertex {x}")
    t = st.t + 1
    through = tg.containing[x]
    old = {s: free.current(s) for s in through}
    new: dict[int, np.ndarray] = {}
    for s in through:
        axes = tg.axes(s)
        a = axes.index(p)
        arr = np.zeros_like(old[s])
        idx = [slice(None)] * arr.ndim
        idx[a] = y
        arr[tuple(idx)] = old[s][tuple(idx)]
        new[s] = arr
    for s in _local_sets(run, x):
        verts = tg.simplices[s]
        axes = tg.axes(s)
        res = free.current(s).copy()
        pool = [v for v in verts if tg.part_of[v] != p]
        for size in range(1, len(pool) + 1):
            for A in combinations(pool, size):
                ax_sid = tg.find(A + (x,))
                if ax_sid is None:
                    continue
                ax_axes = tg.axes(ax_sid)
                a = ax_axes.index(p)
                idx = [slice(None)] * len(ax_axes)
                idx[a] = y
                res &= _lift(old[ax_sid][tuple(idx)], [q for q in ax_axes if q != p], axes)
        if p in axes:
            idx = [slice(None)] * res.ndim
            idx[axes.index(p)] = y
            res[tuple(idx)] = False
        new[s] = res
    free.log.append((p, y, x))
    for s, arr in new.items():
        free.F[s] = arr
        free.ptr[s] = len(free.log)
        free.touched[s] = t
    for z in run.part_vertices[p]:
        if z != x and st.phi[z] < 0:
            zs = tg.vertex_sid[z]
            if zs >= 0:
                free.F[zs][y] = False
    _update_marks(run, x, y, p)
    st.phi[x] = y
    st.used[p][y] = True
    st.t = t
    st.embedded_at[x] = t
    st.ledger.commit(x)
    for z in tg.nbrs[x]:
        if st.phi[z] < 0:
            st.regime[z] = free.size(tg.vertex_sid[z])
    _admit(run, x, p)


def _update_marks(run: Run, x: int, y: int, p: int) -> None:
    tg, free = run.target, run.free
    if not free.marks:
        return
    near = set(tg.nbrs[x])
    for e in list(free.marks):
        rest = free.mark_verts[e]
        if x in rest:
            a = rest.index(x)
            free.marks[e] = np.take(free.marks[e], y, axis=a)
            free.mark_verts[e] = tuple(v for v in rest if v != x)
            if not free.mark_verts[e]:
                del free.marks[e], free.mark_verts[e]
            continue
        if near.intersection(rest):
            free.marks[e] = free.marks[e] & free.current(tg.find(rest))
        else:
            parts = [int(tg.part_of[v]) for v in rest]
            if p in parts:
                idx = [slice(None)] * len(rest)
                idx[parts.index(p)] = y
                arr = free.marks[e].copy()
                arr[tuple(idx)] = False
                free.marks[e] = arr


def _admit(run: Run, x: int, p: int) -> None:
    st, tg, free, cfg = run.state, run.target, run.free, run.cfg
    for z in run.part_vertices[p]:
        z = int(z)
        if z == x or st.phi[z] >= 0 or z in st.queued or z in st.jumpers:
            continue
        zs = tg.vertex_sid[z]
        if free.F[zs].sum() < cfg.queue_admission * st.regime[z]:
            st.queue.append(z)
            st.queued.add(z)
            st.Q_count[p] += 1


def _queue_overflow(run: Run) -> int | None:
    st, cfg = run.state, run.cfg
    if cfg.queue_abort >= 1:
        return None
    for p, cnt in st.Q_count.items():
        if cnt > cfg.queue_abort * run.G.ground.size(p):
            return p
    return None


# ----------------------------------------------------------------------------
# phases


def _remaining_core(run: Run) -> bool:
    st = run.state
    return bool(np.any((st.phi < 0) & ~np.isin(np.arange(len(st.phi)), list(st.buffer))))


def step(run: Run) -> Failure | None:
    """Select, filter, choose and apply one embedding."""
    tg, st, free = run.target, run.state, run.free
    x = select_next(run)
    gs = good_set(run, x)
    fx = len(gs.candidates)
    okm = gs.members
    rec = {"t": st.t + 1, "x": list(tg.name(x)), "F_x": fx, "OK_x": int(len(okm)),
           "queue": len(st.queue), "jumpers": len(st.jumpers),
           "nu_prime": {",".join(f"{a}.{b}" for a, b in (tg.name(v) for v in k)): val
                        for k, val in sorted(gs.nu_touched.items())}}
    if len(okm) == 0:
        rec["y"] = None
        run.transcript.append(rec)
        return Failure("empty-good-set", st.t + 1,
                       {"x": tg.name(x), "F_x": fx, "exceptional": gs.exceptional, "dangerous": gs.dangerous})
    y = int(okm[run.rng.integers(len(okm))])
    rec["y"] = y
    run.transcript.append(rec)
    tel = run.telemetry
    tel.good_fraction.append(len(okm) / fx if fx else 0.0)
    tel.free_ratio.append(fx / max(st.regime[x], 1))
    apply_embedding(run, x, y)
    tel.queue_sizes.append(len(st.queue))
    tel.jumper_sizes.append(len(st.jumpers))
    tel.unused_min.append(int(min((~u).sum() for u in st.used.values())))
    if free.marks:
        fr = [free.marks[e].sum() / max(free.size(tg.find(free.mark_verts[e])), 1) for e in free.marks]
        tel.marked_fraction.append(float(max(fr)))
    if run.cfg.reg_cadence and st.t % run.cfg.reg_cadence == 0:
        _sample_regularity(run)
    return None


def _sample_regularity(run: Run) -> None:
    from ..regularity import pair_deviation_sampled
    tg, free, st = run.target, run.free, run.state
    pairs = [s for s, verts in enumerate(tg.simplices) if len(verts) == 2 and all(st.phi[v] < 0 for v in verts)]
    if not pairs:
        return
    s = pairs[int(run.rng.integers(len(pairs)))]
    a, b = tg.simplices[s]
    dev = pair_deviation_sampled(free.current(s), free.current(tg.vertex_sid[a]), free.current(tg.vertex_sid[b]),
                                 samples=run.cfg.reg_samples, min_frac=0.1, rng=run.rng)
    run.telemetry.regularity.append((st.t, float(dev)))


def run_iterative(run: Run) -> Failure | None:
    t0 = time.perf_counter()
    try:
        while _remaining_core(run):
            fail = step(run)
            if fail is not None:
                return fail
            p = _queue_overflow(run)
            if p is not None:
                return Failure("queue-overflow", run.state.t, {"part": p, "queued": run.state.Q_count[p]})
        run.state.T = run.state.t
        return None
    finally:
        run.telemetry.timings["iterative"] = time.perf_counter() - t0


def available_sets(run: Run) -> dict[int, np.ndarray]:
    """A'_x for every unembedded vertex: free, unmarked and unused images."""
    tg, free, st = run.target, run.free, run.state
    out = {}
    for x in range(tg.n_vertices):
        if st.phi[x] >= 0:
            continue
        p = int(tg.part_of[x])
        avail = free.current(tg.vertex_sid[x]) & ~st.used[p]
        for e in tg.tops_containing[x]:
            if e in free.marks and free.mark_verts[e] == (x,):
                avail = avail & ~free.marks[e]
        out[x] = avail
    return out


def conclude_sdr(run: Run) -> Failure | None:
    t0 = time.perf_counter()
    tg, st = run.target, run.state
    avail = available_sets(run)
    try:
        for p in tg.parts:
            left = [x for x in sorted(avail) if tg.part_of[x] == p]
            if not left:
                continue
            right = np.flatnonzero(~st.used[p])
            pos = {int(v): i for i, v in enumerate(right)}
            adj = [[pos[int(v)] for v in np.flatnonzero(avail[x])] for x in left]
            match_l, match_r = hopcroft_karp(adj, len(right))
            if any(m < 0 for m in match_l):
                S, NS = hall_witness(adj, match_l, match_r)
                return Failure("hall", st.t, {"part": p, "S": [tg.name(left[i]) for i in S],
                                               "neighbours": [int(right[j]) for j in NS]})
            for i, x in enumerate(left):
                y = int(right[match_l[i]])
                st.phi[x] = y
                st.used[p][y] = True
        return None
    finally:
        run.telemetry.timings["sdr"] = time.perf_counter() - t0


def validate_embedding(H: Complex, GM: MarkedComplex, gamma: Mapping | None, phi: Mapping[int, np.ndarray]) -> list[str]:
    """Independent check of a total embedding given as per-part image arrays."""
    G = GM.complex
    errors = []
    for p in H.ground.parts:
        img = np.asarray(phi.get(p, []))
        n = H.ground.size(p)
        if img.shape != (n,) or sorted(img.tolist()) != list(range(G.ground.size(p))):
            errors.append(f"part {p}: map is not a bijection onto V_{p}")
    if errors:
        return errors
    idx = H.index
    k = G.k
    for c, arr in H.parts.items():
        if idx.size(c) == 0:
            continue
        axes = idx.axes(c)
        rows = np.argwhere(arr)
        if rows.size == 0:
            continue
        imgs = tuple(np.asarray(phi[p])[rows[:, a]] for a, p in enumerate(axes))
        bad = ~G.part(c)[imgs]
        if bad.any():
            errors.append(f"copy {c}: {int(bad.sum())} simplices map outside G")
        if idx.size(c) == k and c in GM.marks:
            hit = GM.marks[c][imgs]
            if hit.any():
                errors.append(f"copy {c}: {int(hit.sum())} edges map onto marked edges")
    for key, allowed in gamma_sets(gamma).items():
        img = tuple(int(phi[p][o]) for p, o in key)
        if not allowed[img]:
            errors.append(f"restriction on {key} violated")
    return errors


def embed(H: Complex, GM: MarkedComplex | Complex, gamma: Mapping | None = None,
          cfg: ParamConfig | None = None, seed: int = 0, transcript: Any = None) -> Embedding | Failure:
    if isinstance(GM, Complex):
        GM = MarkedComplex.unmarked(GM)
    cfg = cfg or ParamConfig(k=GM.complex.k)
    t0 = time.perf_counter()
    header = {"type": "header", "seed": int(seed), "cfg": cfg.to_dict()}
    try:
        run = init_state(H, GM, gamma, None, cfg, seed)
    except HypothesisError as exc:
        out: Embedding | Failure = Failure("hypothesis", 0, {"problems": exc.problems})
        _write_transcript(transcript, header, [], out)
        return out
    except BufferInfeasible as exc:
        out = Failure("buffer", 0, {"part": exc.part, "message": str(exc)})
        _write_transcript(transcript, header, [], out)
        return out
    run.telemetry.timings["init"] = time.perf_counter() - t0
    fail = run_iterative(run) or conclude_sdr(run)
    if fail is not None:
        fail.telemetry = run.telemetry
        out = fail
    else:
        tg = run.target
        phi = {p: run.state.phi[run.part_vertices[p]].copy() for p in tg.parts}
        errors = validate_embedding(H, GM, gamma, phi)
        if errors:
            raise EngineBug("engine produced an invalid embedding: " + "; ".join(errors))
        out = Embedding(phi, run.telemetry, int(run.state.T or 0))
    _write_transcript(transcript, header, run.transcript, out)
    return out


def _write_transcript(dest: Any, header: dict, records: list[dict], out: Embedding | Failure) -> None:
    if dest is None:
        return
    tail = {"type": "result", "ok": out.ok}
    if isinstance(out, Failure):
        tail.update(out.to_dict())
    lines = [json.dumps(_jsonable(header), sort_keys=True)]
    lines += [json.dumps(_jsonable(dict(type="step", **r)), sort_keys=True) for r in records]
    lines.append(json.dumps(_jsonable(tail), sort_keys=True))
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w") as fh:
            fh.write(text)
