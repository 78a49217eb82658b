"""Densities, counting checks and regularity estimates."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, Iterable, Sequence

import numpy as np

from . import kernels
from .complex import Complex, ComplexError, _lift, relative_density

DEFAULT_BUDGET = 10 ** 8


class BudgetExceeded(ComplexError):
    pass


@dataclass
class RegularityReport:
    copy: int
    deviation: float
    method: str
    samples: int
    lower_bound: bool
    density: float
    seed: int | None = None
    budget: int | None = None
    witness: dict[str, Any] | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _constraints(J: Complex, G: Complex) -> tuple[list[int], list[tuple[np.ndarray, tuple]]]:
    if J.index != G.index:
        raise ComplexError("J and G must share an index complex")
    idx = J.index
    offset, domains = {}, []
    for p in J.ground.parts:
        offset[p] = len(domains)
        domains.extend([G.ground.size(p)] * J.ground.size(p))
    cons = []
    for c in sorted(J.parts):
        if idx.size(c) == 0:
            continue
        if c not in G.parts:
            if J.parts[c].any():
                return domains, [(np.zeros((), dtype=bool), ())]
            continue
        axes = idx.axes(c)
        for row in np.argwhere(J.parts[c]):
            vs = tuple(offset[p] + int(o) for p, o in zip(axes, row))
            cons.append((G.parts[c], vs))
    return domains, cons


def hom_count(J: Complex, G: Complex, budget: int = DEFAULT_BUDGET) -> int:
    """Partite homomorphisms of J into G: maps Y_i -> V_i sending every simplex of J into G."""
    domains, cons = _constraints(J, G)
    space = 1
    for d in domains:
        space *= d
    if space > budget:
        raise BudgetExceeded(f"map space {space} exceeds budget {budget}")
    return kernels.hom_count(domains, cons)


def hom_density(J: Complex, G: Complex, budget: int = DEFAULT_BUDGET) -> Fraction:
    domains, _ = _constraints(J, G)
    space = 1
    for d in domains:
        space *= d
    if space == 0:
        raise ComplexError("empty map space")
    return Fraction(hom_count(J, G, budget), space)


def triangle_check(G: Complex, i: int, j: int, k: int) -> tuple[int, float, float]:
    """(triangle count, size-weighted product of pair densities, normalised difference)."""
    idx = G.index
    cij, cik, cjk = idx.copy((i, j)), idx.copy((i, k)), idx.copy((j, k))
    for c in (cij, cik, cjk):
        if c not in G.parts:
            raise ComplexError(f"pair part {idx.subset(c)} is undefined")
    a, b, c = (G.part(x).astype(np.int64) for x in (cij, cik, cjk))
    # pair arrays follow sorted base order, so transpose where needed
    a = _oriented(G, cij, (i, j), a)
    b = _oriented(G, cik, (i, k), b)
    c = _oriented(G, cjk, (j, k), c)
    count = int(np.einsum("ab,ac,bc->", a, b, c))
    ni, nj, nk = (G.ground.size(idx.copy((p,))) for p in (i, j, k))
    vol = ni * nj * nk
    if vol == 0:
        return 0, 0.0, 0.0
    dens = [x.sum() / x.size for x in (a, b, c)]
    predicted = vol * dens[0] * dens[1] * dens[2]
    return count, float(predicted), float(abs(count - predicted) / vol)


def _oriented(G: Complex, c: int, want: tuple, arr: np.ndarray) -> np.ndarray:
    have = G.index.subset(c)
    return arr if tuple(have) == tuple(want) else arr.T


def _star(G: Complex, c: int) -> np.ndarray:
    out = np.ones(G.shape(c), dtype=bool)
    for d in G.index.strict_below(c):
        if G.index.size(d) and d in G.parts:
            out &= G.lifted(d, c)
    return out


def regularity_deviation(G: Complex, c: int, mode: str = "sampled", budget: int = 1 << 22,
                         min_frac: float = 0.1, seed: int = 0, samples: int = 200) -> RegularityReport:
    """Largest observed ``|d_c(G[J]) - d_c(G)|`` over sub-complexes J with large star sets."""
    if c not in G.parts:
        raise ComplexError(f"part {G.index.subset(c)} is undefined")
    star = _star(G, c)
    total = int(star.sum())
    if total == 0:
        raise ComplexError("star set is empty")
    arr = G.part(c)
    d = float(arr.sum() / total)
    size = G.index.size(c)
    if mode == "exact":
        if size != 2:
            raise ComplexError("exact mode is only available for pair parts")
        a, b = G.index.axes(c)
        adj = arr & _lift(G.part(a), (a,), (a, b)) & _lift(G.part(b), (b,), (a, b))
        flip = adj.shape[0] > adj.shape[1]
        if flip:
            adj = adj.T
        if (1 << adj.shape[0]) * max(adj.shape[1], 1) > budget:
            raise BudgetExceeded("exact search exceeds budget")
        dev, mask, s, sign = kernels.pair_deviation_exact(adj.astype(np.int64), min_frac * total, d)
        rows = [r for r in range(adj.shape[0]) if mask >> r & 1]
        cols = _best_cols(adj, rows, s, sign)
        wit = {"rows" if not flip else "cols": rows, "cols" if not flip else "rows": cols}
        return RegularityReport(c, float(dev), "exact", 1 << adj.shape[0], False, d, seed, budget, wit)
    if mode == "proxy":
        if size != 2:
            raise ComplexError("proxy mode is only available for pair parts")
        m = arr.astype(np.float64)
        n1, n2 = m.shape
        c4 = float(np.einsum("ab,cb,cd,ad->", m, m, m, m)) / (n1 * n1 * n2 * n2)
        dev = max(c4 - d ** 4, 0.0) ** 0.25
        return RegularityReport(c, dev, "proxy", 0, True, d, seed, None, {"c4_density": c4})
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    best, wit = _sampled(G, c, star, d, min_frac, rng, samples)
    return RegularityReport(c, best, "sampled", samples, True, d, seed, None, wit)


def _best_cols(adj: np.ndarray, rows: list[int], s: int, sign: int) -> list[int]:
    if not rows or s == 0:
        return []
    deg = adj[rows].sum(axis=0)
    order = np.argsort(deg, kind="stable")
    pick = order[::-1][:s] if sign > 0 else order[:s]
    return sorted(int(v) for v in pick)


def _sampled(G: Complex, c: int, star: np.ndarray, d: float, min_frac: float,
             rng: np.random.Generator, samples: int) -> tuple[float, dict]:
    idx = G.index
    axes = idx.axes(c)
    arr = G.part(c)
    total = int(star.sum())
    lo = min_frac ** (1 / max(len(axes), 1))
    best, wit = 0.0, {}
    for t in range(samples):
        keep = {}
        for p in axes:
            n = G.ground.size(p)
            frac = rng.uniform(lo, 1.0)
            keep[p] = rng.random(n) < frac
        sub = star.copy()
        for p in axes:
            sub &= _lift(keep[p], (p,), axes)
        # every other sample also thins the lower parts
        if t % 2 == 1 and len(axes) > 2:
            q = rng.uniform(0.5, 1.0)
            for e in idx.strict_below(c):
                if idx.size(e) >= 2 and e in G.parts:
                    sub &= _lift(rng.random(G.shape(e)) < q, idx.axes(e), axes)
        cnt = int(sub.sum())
        if cnt <= min_frac * total or cnt == 0:
            continue
        dv = abs(int((arr & sub).sum()) / cnt - d)
        if dv > best:
            best, wit = dv, {"sample": t, "sizes": {str(p): int(keep[p].sum()) for p in axes}}
    if len(axes) == 2:
        dv, w = _pair_greedy(arr & star, d, min_frac * total)
        if dv > best:
            best, wit = dv, w
    return float(best), wit


def _pair_greedy(adj: np.ndarray, d: float, min_star: float) -> tuple[float, dict]:
    """Neighbourhood candidates: A = N(b) for a column b, B = best prefix by degree into A."""
    best, wit = 0.0, {}
    adj = adj.astype(np.int64)
    for b in range(adj.shape[1]):
        for rows in (np.flatnonzero(adj[:, b]), np.flatnonzero(adj[:, b] == 0)):
            if len(rows) == 0:
                continue
            deg = np.sort(adj[rows].sum(axis=0))
            s = np.arange(1, len(deg) + 1)
            area = len(rows) * s
            ok = area > min_star
            if not ok.any():
                continue
            hi = np.cumsum(deg[::-1]) / area - d
            low = d - np.cumsum(deg) / area
            dv = float(max(hi[ok].max(), low[ok].max()))
            if dv > best:
                best, wit = dv, {"column": int(b), "rows": int(len(rows))}
    return best, wit


def pair_deviation_sampled(pair: np.ndarray, left: np.ndarray, right: np.ndarray, samples: int = 8,
                           min_frac: float = 0.1, rng: np.random.Generator | None = None) -> float:
    """Sampled deviation of a bipartite free set restricted to its vertex sets."""
    rng = rng or np.random.default_rng(0)
    rows, cols = np.flatnonzero(left), np.flatnonzero(right)
    if len(rows) == 0 or len(cols) == 0:
        return 0.0
    adj = pair[np.ix_(rows, cols)]
    total = adj.size
    d = adj.sum() / total
    lo = np.sqrt(min_frac)
    best = 0.0
    for _ in range(samples):
        ra = rng.random(len(rows)) < rng.uniform(lo, 1)
        cb = rng.random(len(cols)) < rng.uniform(lo, 1)
        area = ra.sum() * cb.sum()
        if area <= min_frac * total:
            continue
        best = max(best, abs(adj[np.ix_(ra, cb)].sum() / area - d))
    return float(best)


def typical_degree_report(G: Complex, part: int, target: int, tol: float,
                          check_regularity: bool = False, seed: int = 0) -> tuple[list[int], float]:
    """Vertices v of ``part`` whose neighbourhood at copy ``target`` has atypical size.

    ``target`` is a copy not containing ``part``; the copy above it and ``part``
    supplies the neighbourhood ``G(v)_target``.  A vertex is atypical when
    ``| |G(v)_target| - d * |star at v| | > tol * |star at v|`` with ``d`` the
    relative density of the copy above.
    """
    idx = G.index
    base = idx.base_of(part)
    sub = idx.subset(target)
    if base in sub:
        raise ComplexError("target copy must avoid the vertex part")
    ups = [u for u in idx.above(target) if idx.size(u) == len(sub) + 1 and idx.below(u).get((base,)) == part]
    if not ups or ups[0] not in G.parts:
        raise ComplexError("no defined copy above the target and the part")
    up = ups[0]
    axes = idx.axes(up)
    a = axes.index(part)
    d = float(relative_density(G, up))
    arr = np.moveaxis(G.part(up), a, 0).reshape(G.ground.size(part), -1)
    star = np.moveaxis(_star(G, up), a, 0).reshape(G.ground.size(part), -1)
    cnt = arr.sum(axis=1)
    st = star.sum(axis=1)
    bad = np.abs(cnt - d * st) > tol * np.maximum(st, 1)
    bad &= G.part(part) if part in G.parts else True
    out = [int(v) for v in np.flatnonzero(bad)]
    if check_regularity and len(sub) == 2:
        rng = np.random.default_rng(seed)
        b1, b2 = idx.axes(target)
        for v in range(G.ground.size(part)):
            if v in out:
                continue
            sl = [slice(None)] * len(axes)
            sl[a] = v
            nb = G.part(up)[tuple(sl)]
            dev = pair_deviation_sampled(nb, nb.any(axis=1), nb.any(axis=0), 8, 0.1, rng)
            if dev > tol:
                out.append(v)
        out.sort()
    n = G.ground.size(part)
    return out, (len(out) / n if n else 0.0)


def neighborhood_count_check(G: Complex, A: int, I: Iterable[int], tol: float, samples: int = 200,
                             seed: int = 0, part: int | None = None) -> float:
    """Fraction of sampled P in G_A whose common extension count is off by more than ``tol``.

    For a tuple P of copy ``A`` and the extra ``part``, the count is the number of
    v with ``P_S + v`` in G for every S in ``I`` (copies of subsets of A).
    ``samples=0`` checks every tuple of ``G_A``.
    """
    idx = G.index
    sub_a = idx.subset(A)
    if part is None:
        part = next(p for p in idx.singletons if idx.subset(p)[0] not in sub_a)
    base = idx.subset(part)[0]
    arr = G.part(A)
    tuples = np.argwhere(arr)
    if len(tuples) == 0:
        raise ComplexError("G_A is empty")
    rng = np.random.default_rng(seed)
    pick = tuples[rng.integers(len(tuples), size=min(samples, len(tuples)))] if samples else tuples
    n = G.ground.size(part)
    expected = float(n)
    slices = []
    axes_a = idx.axes(A)
    for s in sorted(set(I)):
        ss = idx.subset(s)
        if not set(ss) <= set(sub_a):
            raise ComplexError("I must index subsets of A")
        up = idx.copy(tuple(sorted(ss + (base,))))
        if up not in G.parts:
            raise ComplexError(f"part {idx.subset(up)} is undefined")
        expected *= float(relative_density(G, up))
        slices.append((s, up))
    bad = 0
    for P in pick:
        ok = np.ones(n, dtype=bool) if part not in G.parts else G.part(part).copy()
        for s, up in slices:
            if idx.size(s) == 0:
                continue
            ax_up = idx.axes(up)
            sel = []
            for p in ax_up:
                sel.append(slice(None) if p == part else int(P[axes_a.index(p)]))
            ok &= G.part(up)[tuple(sel)]
        cnt = int(ok.sum())
        if abs(cnt - expected) > tol * expected:
            bad += 1
    return bad / len(pick)
