"""End-to-end F-packing of a planted instance."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Any, Sequence

import numpy as np

from ..complex import Complex, Ground, IndexComplex, MarkedComplex
from ..embed import ParamConfig, calibrated, embed
from ..gen import edges_complex
from ..superreg import SuperRegParams, delete_to_super_regular
from .balance import BalanceResult, MajorizationError, balance_class_vectors, top_up
from .cells import CellSystem, marked_approximation
from .cover import CoverResult, FCopy, copy_edges_ok, cover_exceptional
from .matching import MatchingResult, reduced_matching
from .reduced import ReducedGraph, build_reduced, trim_reduced


@dataclass
class PackParams:
    d3: float = 0.1
    nu: float = 0.02
    gamma: float = 0.4
    superreg: SuperRegParams = field(default_factory=lambda: SuperRegParams(0.1, 0.15, 0.3, 0.1, 0.3))
    embed_overrides: dict = field(default_factory=lambda: {"buffer_fraction": 0.4})
    embed_attempts: int = 24
    exact_limit: int = 30
    cover_budget: int = 20000

    def embed_config(self, k: int, D: int) -> ParamConfig:
        return calibrated(k, D=max(D, 1), **self.embed_overrides)

    def to_dict(self) -> dict:
        return {"d3": self.d3, "nu": self.nu, "gamma": self.gamma, "superreg": list(self.superreg.as_tuple()),
                "embed_overrides": dict(self.embed_overrides), "embed_attempts": self.embed_attempts,
                "exact_limit": self.exact_limit, "cover_budget": self.cover_budget}


@dataclass
class CellRun:
    S: tuple
    cell: tuple
    deleted: dict[int, list[int]]
    balance: BalanceResult | None = None
    attempts: int = 0
    failure: str | None = None
    local: MarkedComplex | None = None
    kept: dict[int, np.ndarray] = field(default_factory=dict)
    extra: dict[tuple, int] = field(default_factory=dict)
    shrunk: int = 0

    def to_dict(self) -> dict:
        return {"S": [list(z) for z in self.S], "cell": list(self.cell),
                "deleted": {str(p): v for p, v in sorted(self.deleted.items())},
                "balance": self.balance.to_dict() if self.balance else None,
                "extra": [{"perm": list(p), "copies": c} for p, c in sorted(self.extra.items())],
                "attempts": self.attempts, "shrunk": self.shrunk, "failure": self.failure}


@dataclass
class PackResult:
    F: tuple[int, ...]
    copies: list[FCopy]
    n: int
    reduced: ReducedGraph
    trimmed: ReducedGraph
    matching: MatchingResult
    cells: list[CellRun]
    cover: CoverResult
    timings: dict[str, float] = field(default_factory=dict)
    n1: int = 0

    @property
    def covered(self) -> int:
        return sum(len(c.vertices()) for c in self.copies)

    @property
    def uncovered(self) -> int:
        return self.n - self.covered

    @property
    def allowance(self) -> int:
        """Uncovered vertices the pipeline may leave: rounding per matched cell plus unmatched clusters."""
        return 3 * sum(self.F) * self.matching.size + self.n1 * len(self.matching.uncovered)

    @property
    def ok(self) -> bool:
        return not any(c.failure for c in self.cells) and not self.cover.failed

    def to_dict(self) -> dict[str, Any]:
        return {
            "F": list(self.F), "n": self.n, "covered": self.covered, "uncovered": self.uncovered,
            "allowance": self.allowance, "ok": self.ok,
            "reduced_edges": [[list(z) for z in S] for S in self.reduced.edges],
            "trimmed_clusters": [list(z) for z in sorted(self.trimmed.trimmed)],
            "matching": {"edges": [[list(z) for z in S] for S in self.matching.edges],
                         "unmatched": [list(z) for z in self.matching.uncovered], "exact": self.matching.exact},
            "cells": [c.to_dict() for c in self.cells],
            "cover": {"copies": len(self.cover.copies), "failed": [list(v) for v in self.cover.failed]},
            "copies": [c.to_dict() for c in self.copies],
        }


def choose_cell(GM: MarkedComplex, cells: CellSystem, S: tuple, d3: float, nu: float) -> tuple | None:
    """The densest triple-cell over ``S`` with few marks, or None."""
    idx = GM.complex.index
    A = tuple(p for p, _ in S)
    c = idx.copy(A)
    mem = [cells.members(p, j) for p, j in S]
    good = GM.complex.part(c)[np.ix_(*mem)]
    marks = GM.mark(c)[np.ix_(*mem)]
    options = list(product(*cells.pair_cell_ids(S))) if cells.k == 3 else [()]
    best, best_count = None, -1
    for cell in options:
        mask = cells.cell_mask(S, cell)
        size = int(mask.sum())
        g, m = int((good & mask).sum()), int((marks & mask).sum())
        if size and m < nu ** 0.25 * size and g > d3 / 2 * size and g > best_count:
            best, best_count = tuple(int(x) for x in cell), g
    return best


def cell_complex(GM: MarkedComplex, cells: CellSystem, S: tuple, cell: tuple) -> MarkedComplex:
    """The cell complex over ``S`` on local ordinals (position within each cluster)."""
    k = cells.k
    idx = IndexComplex.partite(k, k)
    mem = [cells.members(p, j) for p, j in S]
    ground = Ground.of([m.size for m in mem])
    parts: dict[int, np.ndarray] = {idx.copy(()): np.ones((), dtype=bool)}
    for a in range(k):
        parts[a] = np.ones(mem[a].size, dtype=bool)
    if k == 3:
        for n, (a, b) in enumerate(combinations(range(k), 2)):
            p, q = S[a][0], S[b][0]
            parts[idx.copy((a, b))] = cells.pair_cells[(p, q)][np.ix_(mem[a], mem[b])] == cell[n]
    top = idx.copy(tuple(range(k)))
    c = GM.complex.index.copy(tuple(p for p, _ in S))
    mask = cells.cell_mask(S, cell)
    parts[top] = GM.complex.part(c)[np.ix_(*mem)] & mask
    marks = GM.mark(c)[np.ix_(*mem)] & parts[top]
    return MarkedComplex(Complex(idx, ground, parts), {top: marks} if marks.any() else {})


def packing_target(sizes: Sequence[int], F: Sequence[int], counts: dict[tuple, int]) -> tuple[Complex, list[tuple]]:
    """Disjoint copies of complete partite F on parts of the given sizes.

    Returns the complex and, per copy, ``(perm, ordinals per class)``.
    Unused ordinals stay isolated.
    """
    k = len(sizes)
    nxt = [0] * k
    copies = []
    edges = []
    for perm, cnt in sorted(counts.items()):
        for _ in range(cnt):
            classes = []
            for c, p in enumerate(perm):
                classes.append(tuple(range(nxt[p], nxt[p] + F[c])))
                nxt[p] += F[c]
            copies.append((tuple(perm), classes))
            for pick in product(*[[(perm[c], o) for o in classes[c]] for c in range(k)]):
                edges.append(pick)
    if any(nxt[p] > sizes[p] for p in range(k)):
        raise ValueError("copies do not fit the part sizes")
    return edges_complex(IndexComplex.partite(k, k), list(sizes), edges), copies


def validate_packing(G: Complex, copies: Sequence[FCopy], F: Sequence[int]) -> list[str]:
    errors = []
    seen: set = set()
    for i, cp in enumerate(copies):
        if sorted(len(c) for c in cp.classes) != sorted(F):
            errors.append(f"copy {i} has class sizes {[len(c) for c in cp.classes]}")
        if len(set(cp.parts)) != len(cp.parts):
            errors.append(f"copy {i} repeats a part")
        for v in cp.vertices():
            if v in seen:
                errors.append(f"vertex {v} used twice")
            seen.add(v)
        if not copy_edges_ok(G, cp):
            errors.append(f"copy {i} uses a non-edge")
    return errors


def _embed_with_retries(H: Complex, GJ: MarkedComplex, cfg: ParamConfig, attempts: int, seed: int):
    res, misses, used = None, 0, 0
    for attempt in range(attempts):
        used = attempt + 1
        res = embed(H, GJ, None, cfg, seed=seed + attempt)
        if res.ok:
            break
        misses = misses + 1 if res.stage == "buffer" else 0
        if misses == 3 and cfg.buffer_fraction > 0.1:
            # copies of F are cliques, so a large buffer may not fit at all
            cfg = cfg.override({"buffer_fraction": round(cfg.buffer_fraction - 0.05, 4)})
            misses = 0
    return res, used, cfg


def pack(G0: Complex, F: Sequence[int], cells: CellSystem, params: PackParams | None = None,
         seed: int = 0) -> PackResult:
    """Reduced graph, trimming, matching, cleanup, exceptional cover, balancing, per-cell embedding."""
    params = params or PackParams()
    F = tuple(int(v) for v in F)
    if len(F) != cells.k:
        raise ValueError("F needs one class per uniformity level")
    if len(set(F)) == 1:
        raise MajorizationError("all classes of F have equal size, so leftovers cannot be bounded")
    seeds = np.random.SeedSequence(seed).spawn(4)
    rng_half = np.random.default_rng(seeds[0])
    timings: dict[str, float] = {}
    clock = time.perf_counter()

    def lap(name: str) -> None:
        nonlocal clock
        now = time.perf_counter()
        timings[name] = now - clock
        clock = now

    GM = marked_approximation(G0, cells)
    R = build_reduced(GM, cells, params.d3, params.nu)
    lap("reduced")
    R2 = trim_reduced(R, cells, params.nu)
    lap("trim")
    match = reduced_matching(R2, params.exact_limit)
    lap("matching")

    runs: list[CellRun] = []
    exceptional: list[tuple] = []
    reserve = {p: np.zeros(G0.ground.size(p), dtype=bool) for p in G0.ground.parts}
    matched_clusters = {z for S in match.edges for z in S}
    for z in sorted(set(cells.clusters()) - matched_clusters):
        exceptional.extend((z[0], int(v)) for v in cells.members(*z))
    for n_cell, S in enumerate(match.edges):
        cell = choose_cell(GM, cells, S, params.d3, params.nu)
        if cell is None:
            runs.append(CellRun(S, (), {}, failure="cell"))
            for z in S:
                exceptional.extend((z[0], int(v)) for v in cells.members(*z))
            continue
        local = cell_complex(GM, cells, S, cell)
        dr = delete_to_super_regular(local, params.superreg, equalize=False, check=False,
                                     seed=int(seeds[1].generate_state(1)[0]) + n_cell)
        run = CellRun(S, cell, {a: sorted(int(v) for v in dr.deleted.get(a, [])) for a in range(cells.k)},
                      local=dr.complex)
        runs.append(run)
        for a, (p, j) in enumerate(S):
            mem = cells.members(p, j)
            keep_local = np.asarray(dr.kept(a), dtype=np.intp)
            run.kept[a] = mem[keep_local]
            exceptional.extend((p, int(mem[v])) for v in run.deleted[a])
            coin = rng_half.random(keep_local.size) < 0.5
            reserve[p][mem[keep_local][coin]] = True
    lap("cleanup")

    cover = cover_exceptional(G0, exceptional, cells, reserve, F, gamma=params.gamma,
                              seed=int(seeds[2].generate_state(1)[0]), strict=False,
                              node_budget=params.cover_budget)
    lap("cover")

    used = {p: np.zeros(G0.ground.size(p), dtype=bool) for p in G0.ground.parts}
    for cp in cover.copies:
        for p, v in cp.vertices():
            used[p][v] = True
    copies = list(cover.copies)
    embed_seed = int(seeds[3].generate_state(1)[0])
    for n_cell, run in enumerate(runs):
        if run.failure:
            continue
        S = run.S
        free_pos = {a: np.flatnonzero(~used[S[a][0]][run.kept[a]]) for a in range(cells.k)}
        sizes = [int(free_pos[a].size) for a in range(cells.k)]
        try:
            run.balance = balance_class_vectors(sizes, F)
        except MajorizationError:
            run.failure = "balance"
            continue
        base = run.balance.counts()
        run.extra = top_up(run.balance)
        full = dict(base)
        for perm, cnt in run.extra.items():
            full[perm] = full.get(perm, 0) + cnt
        # smaller targets leave isolated vertices, which the embedding absorbs freely
        fallbacks = [full, base] if run.extra else [base]
        GJ = run.local.induced({a: free_pos[a].tolist() for a in range(cells.k)})
        cfg = params.embed_config(cells.k, max(F) ** (cells.k - 1))
        res = None
        for level, counts in enumerate(fallbacks):
            H, hcopies = packing_target(sizes, F, counts)
            res, used_attempts, cfg = _embed_with_retries(H, GJ, cfg, params.embed_attempts,
                                                          embed_seed + 1000 * n_cell + 100 * level)
            run.attempts += used_attempts
            if res.ok:
                if level:
                    run.extra = {}
                    run.shrunk = level
                break
        if res is None or not res.ok:
            run.failure = f"embed:{getattr(res, 'stage', 'none')}"
            continue
        for perm, classes in hcopies:
            parts = tuple(S[p][0] for p in perm)
            img = []
            for c, p in enumerate(perm):
                glob = run.kept[p][free_pos[p][res.phi[p][list(classes[c])]]]
                img.append(tuple(sorted(int(v) for v in glob)))
            copies.append(FCopy(parts, tuple(img)))
    lap("embed")
    n = sum(G0.ground.size(p) for p in G0.ground.parts)
    return PackResult(F, copies, n, R, R2, match, runs, cover, timings, cells.n1)
