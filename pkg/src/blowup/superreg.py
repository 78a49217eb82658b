"""Super-regularity of marked complexes: checking, enforcing by deletion, restriction,
and an empirical harness for robust universality."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .complex import (Complex, ComplexError, MarkedComplex, _lift, preplus, relative_density, star_set,
                      vertex_neighborhood)
from .regularity import pair_deviation_sampled, regularity_deviation


@dataclass(frozen=True)
class SuperRegParams:
    """``(eps, eps_prime, d_a, theta, d)``.

    Every value must lie in (0, 1) and ``eps < eps_prime``.  ``strict=True``
    additionally demands the full chain ``eps < eps_prime < d_a < theta < d``.
    """

    eps: float
    eps_prime: float
    d_a: float
    theta: float
    d: float
    strict: bool = False

    def __post_init__(self) -> None:
        vals = (self.eps, self.eps_prime, self.d_a, self.theta, self.d)
        if not all(0 < v < 1 for v in vals):
            raise ValueError("super-regularity parameters must lie in (0, 1)")
        if not self.eps < self.eps_prime:
            raise ValueError("need eps < eps_prime")
        if self.strict and not (self.eps < self.eps_prime < self.d_a < self.theta < self.d):
            raise ValueError("need eps < eps_prime < d_a < theta < d")

    def relaxed(self) -> "SuperRegParams":
        """Parameters guaranteed after deletion: halved floors, marking ceiling 2 sqrt(theta)."""
        return SuperRegParams(self.eps, self.eps_prime, self.d_a / 2, min(2 * self.theta ** 0.5, 0.999),
                              self.d / 2)

    def as_tuple(self) -> tuple:
        return self.eps, self.eps_prime, self.d_a, self.theta, self.d


@dataclass
class Violation:
    condition: str
    part: int | None
    vertex: int | None
    copy: int | None
    value: float
    bound: float
    detail: str = ""


@dataclass
class SuperRegReport:
    params: tuple
    violations: list[Violation] = field(default_factory=list)
    checked: Counter = field(default_factory=Counter)
    estimator: str = "sampled"
    seed: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def failed(self, condition: str) -> list[Violation]:
        return [v for v in self.violations if v.condition.startswith(condition)]

    def to_dict(self) -> dict[str, Any]:
        return {"params": list(self.params), "ok": self.ok, "estimator": self.estimator, "seed": self.seed,
                "checked": dict(sorted(self.checked.items())),
                "violations": [asdict(v) for v in self.violations]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _level_floor(p: SuperRegParams, size: int, k: int) -> float:
    return p.d if size == k else p.d_a


def _within(x: float, target: float, tol: float) -> bool:
    return abs(x - target) <= tol * target + 1e-12


def _rel(G: Complex, c: int) -> float | None:
    den = int(star_set(G, c).sum())
    return None if den == 0 else G.count(c) / den


def index_families(G: Complex, part: int, limit: int = 64, rng: np.random.Generator | None = None) -> list[frozenset]:
    """Downward-closed families I of copies S avoiding ``part`` with S + part defined.

    All of them when there are at most ``limit``; otherwise the two extremes plus a
    random sample of ``limit - 2``.
    """
    idx = G.index
    base = idx.base_of(part)
    empty = next(c for c in idx.copies if idx.size(c) == 0)
    cands = []
    for c in idx.copies:
        sub = idx.subset(c)
        if not sub or base in sub:
            continue
        ups = [d for d in idx.above(c) if idx.size(d) == len(sub) + 1 and idx.below(d).get((base,)) == part
               and d in G.parts]
        if ups:
            cands.append(c)
    cands.sort(key=lambda c: (idx.size(c), c))
    fams: list[frozenset] = []

    def grow(i: int, cur: frozenset) -> bool:
        if len(fams) > limit:
            return False
        if i == len(cands):
            fams.append(cur)
            return True
        c = cands[i]
        if not grow(i + 1, cur):
            return False
        if all(d in cur for d in idx.strict_below(c) if idx.size(d) > 0):
            return grow(i + 1, cur | {c})
        return True

    grow(0, frozenset({empty}))
    if len(fams) <= limit:
        return fams
    rng = rng or np.random.default_rng(0)
    out = {frozenset({empty}), frozenset({empty, *cands})}
    while len(out) < limit:
        cur = {empty}
        for c in cands:
            if all(d in cur for d in idx.strict_below(c) if idx.size(d) > 0) and rng.random() < 0.5:
                cur.add(c)
        out.add(frozenset(cur))
    return sorted(out, key=lambda f: (len(f), sorted(f)))


def check_super_regular(GM: MarkedComplex, p: SuperRegParams, samples: int = 60, seed: int = 0,
                        family_limit: int = 64, reg_vertices: int = 4, with_preplus: bool = True) -> SuperRegReport:
    """Evaluate the three super-regularity conditions and list every violation found."""
    G = GM.complex
    idx = G.index
    k = G.k
    rng = np.random.default_rng(seed)
    rep = SuperRegReport(p.as_tuple(), seed=seed)
    # (i) regularity and density floors
    for c in sorted(G.parts):
        m = idx.size(c)
        if m < 2:
            continue
        d = _rel(G, c)
        rep.checked["i.density"] += 1
        floor = _level_floor(p, m, k)
        if d is None or d < floor:
            rep.violations.append(Violation("i.density", None, None, c, -1.0 if d is None else d, floor))
            continue
        dev = regularity_deviation(G, c, "sampled", min_frac=p.eps, seed=int(rng.integers(2 ** 31)),
                                   samples=samples).deviation
        rep.checked["i.regular"] += 1
        if dev > p.eps:
            rep.violations.append(Violation("i.regular", None, None, c, dev, p.eps, "sampled lower bound"))
    # (ii) and (iii) per vertex
    for part in G.ground.parts:
        present = G.part(part) if part in G.parts else np.ones(G.ground.size(part), dtype=bool)
        fams = index_families(G, part, family_limit, rng) if with_preplus else []
        reg_pick = set(rng.choice(np.flatnonzero(present), size=min(reg_vertices, int(present.sum())),
                                  replace=False).tolist()) if present.any() else set()
        for v in np.flatnonzero(present):
            v = int(v)
            _check_vertex(GM, p, part, v, rep, v in reg_pick, rng)
            for fam in fams:
                _check_preplus(GM, p, part, v, fam, rep)
    return rep


def _mark_slice(GM: MarkedComplex, up: int, part: int, v: int) -> np.ndarray:
    axes = GM.complex.index.axes(up)
    sl = [slice(None)] * len(axes)
    sl[axes.index(part)] = v
    return GM.mark(up)[tuple(sl)]


def _up_copy(G: Complex, c: int, part: int) -> int | None:
    idx = G.index
    base = idx.base_of(part)
    sub = idx.subset(c)
    for d in idx.above(c):
        if idx.size(d) == len(sub) + 1 and idx.below(d).get((base,)) == part and d in G.parts:
            return d
    return None


def _check_vertex(GM: MarkedComplex, p: SuperRegParams, part: int, v: int, rep: SuperRegReport,
                  with_reg: bool, rng: np.random.Generator) -> None:
    G = GM.complex
    idx = G.index
    k = G.k
    Gv = vertex_neighborhood(G, part, v)
    for c in sorted(Gv.parts):
        m = idx.size(c)
        if m == 0:
            continue
        up = _up_copy(G, c, part)
        if up is None:
            continue
        dG, dup = _rel(G, c), _rel(G, up)
        dv = _rel(Gv, c)
        rep.checked["ii.density"] += 1
        if dG is None or dup is None or dv is None or not _within(dv, dG * dup, p.eps_prime):
            rep.violations.append(Violation("ii.density", part, v, c, -1.0 if dv is None else dv,
                                            (dG or 0) * (dup or 0), f"tolerance {p.eps_prime}"))
        if m == k - 1:
            marked = int(_mark_slice(GM, up, part, v).sum())
            total = Gv.count(c)
            rep.checked["ii.marks"] += 1
            if marked > p.theta * total:
                rep.violations.append(Violation("ii.marks", part, v, c, marked, p.theta * total))
        if with_reg and m == 2:
            a, b = idx.axes(c)
            arr = Gv.part(c)
            dev = pair_deviation_sampled(arr, Gv.part(a), Gv.part(b), 16, p.eps_prime, rng)
            rep.checked["ii.regular"] += 1
            if dev > p.eps_prime:
                rep.violations.append(Violation("ii.regular", part, v, c, dev, p.eps_prime, "sampled lower bound"))


def _check_preplus(GM: MarkedComplex, p: SuperRegParams, part: int, v: int, fam: frozenset,
                   rep: SuperRegReport) -> None:
    G = GM.complex
    idx = G.index
    k = G.k
    Gi = preplus(G, part, v, fam)
    tag = ",".join(str(c) for c in sorted(fam))
    base = idx.base_of(part)
    for c in sorted(Gi.parts):
        m = idx.size(c)
        if m == 0:
            continue
        if m == k:
            marked = int((GM.mark(c) & Gi.part(c)).sum())
            rep.checked["iii.marks"] += 1
            if marked > p.theta * Gi.count(c):
                rep.violations.append(Violation("iii.marks", part, v, c, marked, p.theta * Gi.count(c), f"I={tag}"))
        if base in idx.subset(c):
            continue
        dG = _rel(G, c)
        dI = _rel(Gi, c)
        if c in fam:
            up = _up_copy(G, c, part)
            if up is None:
                continue
            want = (dG or 0) * (_rel(G, up) or 0)
        else:
            want = dG or 0
        rep.checked["iii.density"] += 1
        if dI is None or not _within(dI, want, p.eps_prime):
            rep.violations.append(Violation("iii.density", part, v, c, -1.0 if dI is None else dI, want,
                                            f"I={tag} tolerance {p.eps_prime}"))


# ----------------------------------------------------------------------------
# deletion


class DeletionBoundExceeded(ComplexError):
    def __init__(self, part: int, wanted: int, bound: float, reasons: Mapping[int, str]):
        super().__init__(f"part {part}: {wanted} vertices flagged, bound {bound:.1f}")
        self.part = part
        self.wanted = wanted
        self.bound = bound
        self.reasons = dict(reasons)


@dataclass
class DeletionResult:
    complex: MarkedComplex
    deleted: dict[int, list[int]]
    log: list[tuple[int, int, str]]
    report: SuperRegReport | None

    def __iter__(self):
        yield self.complex
        yield self.deleted

    def kept(self, part: int) -> list[int]:
        gone = set(self.deleted.get(part, ()))
        n = self.complex.complex.ground.size(part) + len(gone)
        return [v for v in range(n) if v not in gone]


def _flag_marking(GM: MarkedComplex, p: SuperRegParams, family_limit: int,
                  rng: np.random.Generator) -> dict[int, dict[int, str]]:
    G = GM.complex
    idx = G.index
    k = G.k
    ceiling = p.theta ** 0.5
    out: dict[int, dict[int, str]] = {q: {} for q in G.ground.parts}
    if not GM.marks:
        return out
    for part in G.ground.parts:
        fams = index_families(G, part, family_limit, rng) if k >= 3 else []
        for v in range(G.ground.size(part)):
            Gv = vertex_neighborhood(G, part, v)
            for c in sorted(Gv.parts):
                if idx.size(c) != k - 1:
                    continue
                up = _up_copy(G, c, part)
                if up is not None and _mark_slice(GM, up, part, v).sum() > ceiling * Gv.count(c):
                    out[part].setdefault(v, "Y-marking")
            if v in out[part]:
                continue
            for fam in fams:
                Gi = preplus(G, part, v, fam)
                if any((GM.mark(c) & Gi.part(c)).sum() > ceiling * Gi.count(c) for c in Gi.parts
                       if idx.size(c) == k):
                    out[part][v] = "Y-marking"
                    break
    return out


def _flag_degree(G: Complex, p: SuperRegParams) -> dict[int, dict[int, str]]:
    """Atypical vertices.

    Pairs use the one-sided low-degree rule ``deg < (d - eps) |V_j|``; higher
    levels use two-sided typicality of neighbourhood sizes at tolerance eps.
    """
    idx = G.index
    out: dict[int, dict[int, str]] = {q: {} for q in G.ground.parts}
    for part in G.ground.parts:
        base = idx.base_of(part)
        for c in sorted(G.parts):
            sub = idx.subset(c)
            if not sub or base in sub:
                continue
            up = _up_copy(G, c, part)
            if up is None:
                continue
            axes = idx.axes(up)
            a = axes.index(part)
            arr = np.moveaxis(G.part(up), a, 0).reshape(G.ground.size(part), -1)
            cnt = arr.sum(axis=1)
            if len(sub) == 1:
                other = idx.axes(c)[0]
                n_other = int(G.part(other).sum()) if other in G.parts else G.ground.size(other)
                dens = G.count(up) / max(G.ground.size(part) * n_other, 1)
                bad = cnt < (dens - p.eps) * n_other
            else:
                st = np.moveaxis(star_set(G, up), a, 0).reshape(G.ground.size(part), -1).sum(axis=1)
                d = _rel(G, up) or 0.0
                bad = np.abs(cnt - d * st) > p.eps * np.maximum(st, 1)
            for v in np.flatnonzero(bad):
                out[part].setdefault(int(v), "Z-degree")
    return out


def delete_to_super_regular(GM: MarkedComplex | Complex, p: SuperRegParams, equalize: bool = True, seed: int = 0,
                            target_fraction: float | None = None, check: bool = True,
                            family_limit: int = 16, check_samples: int = 30) -> DeletionResult:
    """Delete marking-bad and degree-atypical vertices, optionally padding to equal counts.

    ``target_fraction`` fixes the number deleted per part at ``floor(f |V_i|)``
    (the graph case deletes exactly ``eps m``); otherwise the bound is
    ``2 theta^(1/3) |V_i|``.
    """
    if isinstance(GM, Complex):
        GM = MarkedComplex.unmarked(GM)
    G = GM.complex
    rng = np.random.default_rng(seed)
    ymark = _flag_marking(GM, p, family_limit, rng)
    zdeg = _flag_degree(G, p)
    reasons = {q: {**zdeg[q], **ymark[q]} for q in G.ground.parts}
    bound = {q: (target_fraction if target_fraction is not None else 2 * p.theta ** (1 / 3)) * G.ground.size(q)
             for q in G.ground.parts}
    for q in G.ground.parts:
        if len(reasons[q]) > bound[q] + 1e-9:
            raise DeletionBoundExceeded(q, len(reasons[q]), bound[q], reasons[q])
    if target_fraction is not None:
        want = {q: int(np.floor(target_fraction * G.ground.size(q) + 1e-9)) for q in G.ground.parts}
    elif equalize:
        top = max(len(r) for r in reasons.values())
        want = {q: top for q in G.ground.parts}
    else:
        want = {q: len(reasons[q]) for q in G.ground.parts}
    log: list[tuple[int, int, str]] = []
    deleted: dict[int, list[int]] = {}
    for q in G.ground.parts:
        chosen = dict(reasons[q])
        rest = np.array([v for v in range(G.ground.size(q)) if v not in chosen], dtype=np.int64)
        extra = want[q] - len(chosen)
        if extra > 0:
            for v in rng.choice(rest, size=extra, replace=False):
                chosen[int(v)] = "equalize"
        deleted[q] = sorted(chosen)
        log.extend((q, v, chosen[v]) for v in sorted(chosen))
    keep = {q: [v for v in range(G.ground.size(q)) if v not in set(deleted[q])] for q in G.ground.parts}
    out = GM.induced(keep)
    report = check_super_regular(out, p.relaxed(), samples=check_samples, seed=seed,
                                 family_limit=family_limit) if check else None
    return DeletionResult(out, deleted, log, report)


# ----------------------------------------------------------------------------
# restriction


class RestrictionError(ComplexError):
    def __init__(self, pairs: list[tuple]):
        super().__init__(f"restriction precondition fails at {pairs[:5]}")
        self.pairs = pairs


def super_restrict(GM: MarkedComplex, keep: Mapping[int, Sequence[int]], p: SuperRegParams,
                   d_prime: float, eps_pp: float | None = None, check: bool = True,
                   seed: int = 0) -> tuple[MarkedComplex, SuperRegReport | None]:
    """``(G[V'], M[V'])`` after verifying that V' is large and meets every neighbourhood well."""
    G = GM.complex
    idx = G.index
    sel = {q: np.zeros(G.ground.size(q), dtype=bool) for q in G.ground.parts}
    for q in G.ground.parts:
        sel[q][list(keep.get(q, range(G.ground.size(q))))] = True
    bad: list[tuple] = []
    for q in G.ground.parts:
        if sel[q].sum() < d_prime * G.ground.size(q):
            bad.append(("size", q))
    for c in sorted(G.parts):
        if idx.size(c) != 2:
            continue
        a, b = idx.axes(c)
        arr = G.part(c)
        for (pi, pj, mat) in ((a, b, arr), (b, a, arr.T)):
            deg = mat.sum(axis=1)
            inside = mat[:, sel[pj]].sum(axis=1)
            for v in np.flatnonzero(sel[pi] & (inside < d_prime * deg)):
                bad.append((int(pi), int(v), int(pj)))
    if bad:
        raise RestrictionError(bad)
    out = GM.induced({q: np.flatnonzero(sel[q]).tolist() for q in G.ground.parts})
    if not check:
        return out, None
    relaxed = SuperRegParams(p.eps_prime, eps_pp or min(2 * p.eps_prime, 0.99), p.d_a / 2,
                             min(p.theta ** 0.5, 0.999), p.d / 2)
    return out, check_super_regular(out, relaxed, seed=seed, family_limit=16)


# ----------------------------------------------------------------------------
# robust universality harness


def unmarked_complex(GM: MarkedComplex) -> Complex:
    """``G \\ M`` as a complex (marks removed from the top level)."""
    G = GM.complex
    parts = dict(G.parts)
    for c, m in GM.marks.items():
        parts[c] = G.parts[c] & ~m
    return G.replace(parts)


def admissible(J: Complex, keep: Mapping[int, np.ndarray], c_sharp: float) -> bool:
    """Large parts, and each kept vertex keeps a c_sharp share of its top-level degree."""
    idx = J.index
    k = J.k
    for q in J.ground.parts:
        if keep[q].sum() < c_sharp * J.ground.size(q):
            return False
    for c in J.top_copies():
        if idx.size(c) != k:
            continue
        axes = idx.axes(c)
        arr = J.part(c)
        for a, q in enumerate(axes):
            mask = np.ones(arr.shape, dtype=bool)
            for b, r in enumerate(axes):
                if b != a:
                    mask &= _lift(keep[r], (r,), axes)
            other = tuple(i for i in range(len(axes)) if i != a)
            full = arr.sum(axis=other) if other else arr.astype(np.int64)
            kept = (arr & mask).sum(axis=other) if other else arr.astype(np.int64)
            if np.any(keep[q] & (kept < c_sharp * full)):
                return False
    return True


def draw_restriction(J: Complex, c_sharp: float, rng: np.random.Generator, attempts: int = 200) -> tuple[dict, int]:
    """A random admissible vertex restriction; returns (keep masks, attempts used)."""
    k = J.k
    lo = min(c_sharp ** (1 / max(k - 1, 1)) * 1.15, 1.0)
    for t in range(1, attempts + 1):
        keep = {}
        for q in J.ground.parts:
            n = J.ground.size(q)
            frac = rng.uniform(max(lo, c_sharp), 1.0)
            size = max(int(np.ceil(frac * n)), int(np.ceil(c_sharp * n)))
            mask = np.zeros(n, dtype=bool)
            mask[rng.choice(n, size=min(size, n), replace=False)] = True
            keep[q] = mask
        if admissible(J, keep, c_sharp):
            return keep, t
    raise ComplexError(f"no admissible restriction after {attempts} attempts")


def robust_universality_trial(J: MarkedComplex | Complex, c_sharp: float, c: float = 0.0, D: int = 3,
                              trials: int = 100, seed: int = 0, cfg: Any = None, attempts: int = 200,
                              c_prime: float = 0.5) -> dict[str, Any]:
    from .embed import ParamConfig, embed
    from .gen import gen_restrictions, gen_target
    if isinstance(J, MarkedComplex):
        J = unmarked_complex(J)
    cfg = cfg or ParamConfig(k=J.k, D=D)
    ss = np.random.SeedSequence(seed)
    stages: Counter = Counter()
    used_attempts = 0
    results = []
    for t, child in enumerate(ss.spawn(trials)):
        rng = np.random.default_rng(child)
        keep, used = draw_restriction(J, c_sharp, rng, attempts)
        used_attempts += used
        Jp = J.induced({q: np.flatnonzero(keep[q]).tolist() for q in J.ground.parts})
        sizes = [Jp.ground.size(q) for q in Jp.ground.parts]
        H = gen_target("random", sizes, rng, k=J.k, r=len(sizes), D=D, index=J.index).H
        gamma = gen_restrictions(H, Jp, c, c_prime, rng) if c > 0 else None
        out = embed(H, MarkedComplex.unmarked(Jp), gamma, cfg, int(rng.integers(2 ** 63)))
        stage = "ok" if out.ok else out.stage
        stages[stage] += 1
        results.append(stage)
    return {"trials": trials, "success": stages["ok"], "stages": dict(sorted(stages.items())),
            "attempts": used_attempts, "outcomes": results}
