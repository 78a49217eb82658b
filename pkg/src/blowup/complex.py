"""Partite and index-complex simplicial complexes.

A complex assigns to every copy of an index complex either a dense boolean
array (a Defined part) or nothing (Undefined).  Axis ``a`` of the array for a
copy ``c`` ranges over the ground part of the ``a``-th singleton copy below
``c``, in base-index order, so a flat C-order index is the mixed-radix rank of
the tuple.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np


class ComplexError(ValueError):
    pass


class GroundMismatch(ComplexError):
    pass


class NotSubcomplex(ComplexError):
    pass


class AmbiguousCopy(ComplexError):
    pass


class DensityUndefined(ComplexError):
    pass


def _subsets(items: Sequence) -> Iterator[tuple]:
    for m in range(len(items) + 1):
        yield from combinations(items, m)


class IndexComplex:
    """Copies of subsets of ``range(base_size)`` with the order ``⊆*``.

    ``below[c]`` maps every subset ``J`` of ``subset(c)`` to the unique copy
    ``J*`` with ``J* ⊆* c``.
    """

    def __init__(self, base_size: int, subsets: Sequence[Sequence[int]],
                 below: Sequence[Mapping[tuple, int]] | None = None):
        self.base_size = int(base_size)
        self._subsets = tuple(tuple(sorted(s)) for s in subsets)
        for s in self._subsets:
            if any(i < 0 or i >= self.base_size for i in s) or len(set(s)) != len(s):
                raise ComplexError(f"bad subset {s}")
        if below is None:
            lookup: dict[tuple, int] = {}
            for c, s in enumerate(self._subsets):
                if s in lookup:
                    raise AmbiguousCopy(f"subset {s} has several copies; pass below explicitly")
                lookup[s] = c
            below = []
            for s in self._subsets:
                try:
                    below.append({j: lookup[j] for j in _subsets(s)})
                except KeyError as exc:
                    raise ComplexError(f"subset {s} is missing the face {exc.args[0]}") from None
        self._below = tuple({tuple(sorted(j)): int(c) for j, c in b.items()} for b in below)
        if len(self._below) != len(self._subsets):
            raise ComplexError("below table length mismatch")
        self._check()
        self._by_subset: dict[tuple, list[int]] = {}
        for c, s in enumerate(self._subsets):
            self._by_subset.setdefault(s, []).append(c)
        self._axes = tuple(tuple(self._below[c][(i,)] for i in s) for c, s in enumerate(self._subsets))
        self._above: list[list[int]] = [[] for _ in self._subsets]
        for c in range(len(self._subsets)):
            for d in set(self._below[c].values()):
                self._above[d].append(c)

    def _check(self) -> None:
        for c, s in enumerate(self._subsets):
            b = self._below[c]
            if set(b) != set(_subsets(s)):
                raise ComplexError(f"copy {c} must list exactly one copy below for each subset")
            if b[s] != c:
                raise ComplexError(f"copy {c} is not below itself")
            for j, d in b.items():
                if self._subsets[d] != j:
                    raise ComplexError(f"copy {d} below {c} has the wrong subset")
                # transitivity: the copies below d are the copies below c
                for jj, dd in self._below[d].items():
                    if b[jj] != dd:
                        raise ComplexError(f"order is not transitive at {c} > {d}")

    @classmethod
    def partite(cls, r: int, k: int) -> "IndexComplex":
        """One copy of each subset of size at most ``k``; singleton ``{i}`` has id ``i``."""
        subs: list[tuple] = [(i,) for i in range(r)] + [()]
        for m in range(2, k + 1):
            subs.extend(combinations(range(r), m))
        return cls(r, subs)

    def __len__(self) -> int:
        return len(self._subsets)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, IndexComplex) and self.base_size == other.base_size
                and self._subsets == other._subsets and self._below == other._below)

    def __hash__(self) -> int:
        return hash((self.base_size, self._subsets))

    def __repr__(self) -> str:
        return f"IndexComplex(r={self.base_size}, copies={len(self)})"

    @property
    def copies(self) -> range:
        return range(len(self._subsets))

    @property
    def k(self) -> int:
        return max(len(s) for s in self._subsets)

    def subset(self, c: int) -> tuple:
        return self._subsets[c]

    def size(self, c: int) -> int:
        return len(self._subsets[c])

    def below(self, c: int) -> Mapping[tuple, int]:
        return self._below[c]

    def above(self, c: int) -> list[int]:
        """Copies ``d`` with ``c ⊆* d``."""
        return self._above[c]

    def is_below(self, a: int, b: int) -> bool:
        return self._below[b].get(self._subsets[a]) == a

    def axes(self, c: int) -> tuple:
        """Singleton copies spanned by ``c`` in base-index order."""
        return self._axes[c]

    def copies_of(self, subset: Iterable[int]) -> list[int]:
        return list(self._by_subset.get(tuple(sorted(subset)), []))

    def copy(self, subset: Iterable[int]) -> int:
        found = self.copies_of(subset)
        if len(found) != 1:
            raise AmbiguousCopy(f"subset {tuple(sorted(subset))} has {len(found)} copies")
        return found[0]

    @property
    def singletons(self) -> tuple:
        return tuple(c for c, s in enumerate(self._subsets) if len(s) == 1)

    def base_of(self, part: int) -> int:
        return self._subsets[part][0]

    def strict_below(self, c: int) -> list[int]:
        return [d for j, d in self._below[c].items() if len(j) < len(self._subsets[c])]

    def down(self, *subsets: Iterable[int]) -> frozenset:
        """Down-closure of the given (uniquely copied) subsets, as copy ids."""
        out: set[int] = set()
        for s in subsets:
            out.update(self._below[self.copy(s)].values())
        return frozenset(out)

    def down_of_copies(self, copies: Iterable[int]) -> frozenset:
        out: set[int] = set()
        for c in copies:
            out.update(self._below[c].values())
        return frozenset(out)

    def is_down_closed(self, copies: Iterable[int]) -> bool:
        cs = set(copies)
        return all(set(self._below[c].values()) <= cs for c in cs)

    def degree(self, c: int) -> int:
        return len(self._above[c])

    def to_table(self) -> list[dict]:
        return [{"id": c, "subset": list(s),
                 "below": [[list(j), d] for j, d in sorted(self._below[c].items())]}
                for c, s in enumerate(self._subsets)]

    @classmethod
    def from_table(cls, base_size: int, table: Sequence[Mapping]) -> "IndexComplex":
        rows = sorted(table, key=lambda row: row["id"])
        if [row["id"] for row in rows] != list(range(len(rows))):
            raise ComplexError("copy ids must be 0..m-1")
        subs = [tuple(row["subset"]) for row in rows]
        below = [{tuple(j): d for j, d in row["below"]} for row in rows]
        return cls(base_size, subs, below)


@dataclass(frozen=True)
class Ground:
    """Vertex parts keyed by singleton copy id."""

    sizes: tuple[tuple[int, int], ...]

    @classmethod
    def of(cls, sizes: Mapping[int, int] | Sequence[int]) -> "Ground":
        if isinstance(sizes, Mapping):
            items = sorted((int(p), int(n)) for p, n in sizes.items())
        else:
            items = [(p, int(n)) for p, n in enumerate(sizes)]
        if any(n < 0 for _, n in items):
            raise ComplexError("part sizes must be nonnegative")
        return cls(tuple(items))

    @property
    def parts(self) -> tuple:
        return tuple(p for p, _ in self.sizes)

    def size(self, part: int) -> int:
        for p, n in self.sizes:
            if p == part:
                return n
        raise KeyError(part)

    def as_dict(self) -> dict[int, int]:
        return dict(self.sizes)

    def check_bounds(self, n: int, C: float) -> list[int]:
        return [p for p, m in self.sizes if not (n <= m <= C * n)]


def _lift(arr: np.ndarray, sub_axes: Sequence[int], full_axes: Sequence[int]) -> np.ndarray:
    """Reshape ``arr`` (axes ``sub_axes``) to broadcast against ``full_axes``."""
    pos = {p: a for a, p in enumerate(full_axes)}
    shape = [1] * len(full_axes)
    for p, n in zip(sub_axes, arr.shape):
        shape[pos[p]] = n
    return arr.reshape(shape)


@dataclass
class Complex:
    """A complex over ``ground`` indexed by ``index``.

    ``parts`` maps copy id to a boolean array; a missing key is Undefined.
    Arrays are treated as immutable once the complex is built.
    """

    index: IndexComplex
    ground: Ground
    parts: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        sing = set(self.index.singletons)
        if set(self.ground.parts) != sing:
            raise GroundMismatch(f"ground parts {self.ground.parts} differ from singleton copies {sorted(sing)}")
        fixed = {}
        for c, arr in self.parts.items():
            a = np.asarray(arr, dtype=bool)
            a.flags.writeable = False
            fixed[int(c)] = a
        self.parts = fixed

    # basic access
    def shape(self, c: int) -> tuple:
        return tuple(self.ground.size(p) for p in self.index.axes(c))

    def defined(self, c: int) -> bool:
        return c in self.parts

    def part(self, c: int) -> np.ndarray:
        try:
            return self.parts[c]
        except KeyError:
            raise ComplexError(f"part {c} {self.index.subset(c)} is undefined") from None

    def get(self, c: int) -> np.ndarray | None:
        return self.parts.get(c)

    def count(self, c: int) -> int:
        return int(self.part(c).sum())

    def tuples(self, c: int) -> list[tuple]:
        return [tuple(int(v) for v in row) for row in np.argwhere(self.part(c))]

    def contains(self, c: int, ords: Sequence[int]) -> bool:
        arr = self.parts.get(c)
        return arr is not None and bool(arr[tuple(ords)])

    def lifted(self, c: int, target: int) -> np.ndarray:
        """Part ``c`` broadcast over the axes of ``target`` (requires ``c ⊆* target``)."""
        return _lift(self.part(c), self.index.axes(c), self.index.axes(target))

    @property
    def k(self) -> int:
        return max((self.index.size(c) for c in self.parts), default=0)

    def top_copies(self) -> list[int]:
        k = self.k
        return [c for c in sorted(self.parts) if self.index.size(c) == k]

    def simplices(self) -> Iterator[tuple[int, tuple]]:
        for c in sorted(self.parts):
            for t in self.tuples(c):
                yield c, t

    def same_frame(self, other: "Complex") -> bool:
        return self.index == other.index and self.ground == other.ground

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Complex) or not self.same_frame(other):
            return False
        if set(self.parts) != set(other.parts):
            return False
        return all(np.array_equal(self.parts[c], other.parts[c]) for c in self.parts)

    def __repr__(self) -> str:
        desc = ", ".join(f"{self.index.subset(c)}:{int(a.sum())}" for c, a in sorted(self.parts.items()))
        return f"Complex({desc})"

    def replace(self, parts: Mapping[int, np.ndarray]) -> "Complex":
        return Complex(self.index, self.ground, dict(parts))

    def vertex_simplex(self, part: int, v: int) -> tuple[int, tuple]:
        return part, (int(v),)

    def induced(self, keep: Mapping[int, Sequence[int]]) -> "Complex":
        """Restrict to the given vertex ordinals per part and renumber them."""
        keep = {p: np.asarray(sorted(keep.get(p, range(self.ground.size(p)))), dtype=np.intp)
                for p in self.ground.parts}
        ground = Ground.of({p: len(v) for p, v in keep.items()})
        parts = {}
        for c, arr in self.parts.items():
            ix = np.ix_(*[keep[p] for p in self.index.axes(c)]) if self.index.size(c) else ()
            parts[c] = arr[ix] if ix else arr.copy()
        return Complex(self.index, ground, parts)


def empty_complex(index: IndexComplex, ground: Ground) -> Complex:
    """The complex ``({∅})`` with every nonempty part Undefined."""
    parts = {c: np.ones((), dtype=bool) for c in index.copies if index.size(c) == 0}
    return Complex(index, ground, parts)


def make_complete(index: IndexComplex, ground: Ground | Mapping[int, int] | Sequence[int]) -> Complex:
    if not isinstance(ground, Ground):
        ground = Ground.of(ground)
    if set(ground.parts) != set(index.singletons):
        raise GroundMismatch("ground parts must match the singleton copies")
    parts = {c: np.ones(tuple(ground.size(p) for p in index.axes(c)), dtype=bool) for c in index.copies}
    return Complex(index, ground, parts)


def from_edges(index: IndexComplex, ground: Ground | Sequence[int],
               edges: Mapping[int, Iterable[Sequence[int]]], defined: Iterable[int] | None = None) -> Complex:
    """Downward closure of the given tuples; ``defined`` defaults to every copy."""
    if not isinstance(ground, Ground):
        ground = Ground.of(ground)
    defined = set(index.copies if defined is None else index.down_of_copies(defined))
    parts = {c: np.zeros(tuple(ground.size(p) for p in index.axes(c)), dtype=bool) for c in defined}
    for c, tups in edges.items():
        sub = index.subset(c)
        for t in tups:
            t = tuple(int(v) for v in t)
            for j, d in index.below(c).items():
                if d in parts:
                    pos = [sub.index(i) for i in j]
                    parts[d][tuple(t[q] for q in pos)] = True
    return Complex(index, ground, parts)


@dataclass
class Violation:
    kind: str
    copy: int
    detail: str
    tuple: tuple | None = None


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(H: Complex, limit: int = 50) -> ValidationReport:
    out: list[Violation] = []
    idx = H.index
    for c in sorted(H.parts):
        arr = H.parts[c]
        if arr.shape != H.shape(c):
            out.append(Violation("partite", c, f"shape {arr.shape} != {H.shape(c)}"))
    if out:
        return ValidationReport(out)
    for c in sorted(H.parts):
        for j, d in sorted(idx.below(c).items()):
            if d == c:
                continue
            if d not in H.parts:
                out.append(Violation("undefined-closure", c, f"part {idx.subset(c)} defined but {j} undefined"))
                continue
            bad = H.parts[c] & ~H.lifted(d, c)
            for row in np.argwhere(bad)[:limit]:
                out.append(Violation("downward-closure", c, f"face {j} missing", tuple(int(v) for v in row)))
    return ValidationReport(out)


def _check_frame(a: Complex, b: Complex) -> None:
    if a.index != b.index:
        raise GroundMismatch("index complexes differ")
    if a.ground != b.ground:
        raise GroundMismatch("grounds differ")


def is_subcomplex(G: Complex, H: Complex) -> bool:
    for c, g in G.parts.items():
        h = H.parts.get(c)
        if h is not None and np.any(g & ~h):
            return False
    return True


def restrict(H: Complex, G: Complex, check: bool = True) -> Complex:
    """``H[G]``: keep tuples of ``H`` all of whose faces in defined parts of ``G`` lie in ``G``."""
    _check_frame(H, G)
    if check and not is_subcomplex(G, H):
        raise NotSubcomplex("G is not a subcomplex of H")
    idx = H.index
    parts = {}
    for c, h in H.parts.items():
        res = h.copy()
        for d in idx.below(c).values():
            g = G.parts.get(d)
            if g is not None:
                res &= _lift(g, idx.axes(d), idx.axes(c))
        parts[c] = res
    return H.replace(parts)


def compose(G: Complex, G2: Complex) -> Complex:
    """``G*G2``: tuples each of whose faces is in-or-undefined for both operands."""
    _check_frame(G, G2)
    idx = G.index
    parts = {}
    for c in idx.copies:
        if c not in G.parts and c not in G2.parts:
            continue
        res = np.ones(G.shape(c), dtype=bool)
        for d in idx.below(c).values():
            for X in (G, G2):
                x = X.parts.get(d)
                if x is not None:
                    res &= _lift(x, idx.axes(d), idx.axes(c))
        parts[c] = res
    return G.replace(parts)


def union(H: Complex, H2: Complex) -> Complex:
    _check_frame(H, H2)
    parts = {}
    for c in set(H.parts) | set(H2.parts):
        a, b = H.parts.get(c), H2.parts.get(c)
        parts[c] = a | b if a is not None and b is not None else (a if a is not None else b).copy()
    return H.replace(parts)


def intersection(H: Complex, H2: Complex) -> Complex:
    _check_frame(H, H2)
    return H.replace({c: H.parts[c] & H2.parts[c] for c in set(H.parts) & set(H2.parts)})


def _targets(H: Complex, c: int, target: Mapping[int, int] | None) -> dict[int, int]:
    """For each defined copy above ``c``, the copy it induces on the complement."""
    idx = H.index
    sub = set(idx.subset(c))
    chosen: dict[int, int] = {}
    for d in idx.above(c):
        if d not in H.parts:
            continue
        rest = tuple(i for i in idx.subset(d) if i not in sub)
        j = idx.below(d)[rest]
        if target is not None and j in target:
            if target[j] != d:
                continue
        elif j in chosen and chosen[j] != d:
            raise AmbiguousCopy(f"neighbourhood part {rest} arises from copies {chosen[j]} and {d}; pass target")
        chosen[j] = d
    return chosen


def neighborhood(H: Complex, c: int, ords: Sequence[int], target: Mapping[int, int] | None = None) -> Complex:
    """``H(S)`` for ``S = (c, ords)``: parts ``J`` hold ``A`` with ``A ∪ S ∈ H``.

    ``target`` maps a complement copy ``J`` to the copy above ``S`` it should be
    read from; it is required when several copies above ``S`` induce the same ``J``.
    """
    if not H.contains(c, ords):
        raise ComplexError(f"{(H.index.subset(c), tuple(ords))} is not in the complex")
    idx = H.index
    parts = {}
    for j, d in _targets(H, c, target).items():
        axes_d = idx.axes(d)
        sub_axes = idx.axes(c)
        sl = [slice(None)] * len(axes_d)
        for p, v in zip(sub_axes, ords):
            sl[axes_d.index(p)] = int(v)
        parts[j] = np.array(H.parts[d][tuple(sl)], dtype=bool)
    return H.replace(parts)


def vertex_neighborhood(H: Complex, part: int, v: int, target: Mapping[int, int] | None = None) -> Complex:
    return neighborhood(H, part, (v,), target)


def up_set(H: Complex, c: int, ords: Sequence[int]) -> dict[int, np.ndarray]:
    """``H^S``: for each defined copy above ``S``, the tuples containing ``S``."""
    idx = H.index
    out = {}
    for d in idx.above(c):
        if d not in H.parts:
            continue
        mask = np.ones(H.shape(d), dtype=bool)
        axes_d = idx.axes(d)
        for p, v in zip(idx.axes(c), ords):
            sel = np.zeros(H.ground.size(p), dtype=bool)
            sel[int(v)] = True
            mask &= _lift(sel, (p,), axes_d)
        out[d] = H.parts[d] & mask
    return out


def star_set(H: Complex, c: int) -> np.ndarray:
    """``H_I^*``: tuples whose strict faces lie in every defined strict-face part."""
    idx = H.index
    res = np.ones(H.shape(c), dtype=bool)
    for d in idx.strict_below(c):
        h = H.parts.get(d)
        if h is not None:
            res &= _lift(h, idx.axes(d), idx.axes(c))
    return res


star_sets = star_set


def relative_density(H: Complex, c: int) -> Fraction:
    num = H.count(c)
    den = int(star_set(H, c).sum())
    if den == 0:
        raise DensityUndefined(f"star set of {H.index.subset(c)} is empty")
    return Fraction(num, den)


def absolute_density(H: Complex, c: int) -> Fraction:
    den = int(np.prod(H.shape(c), dtype=np.int64))
    if den == 0:
        raise DensityUndefined(f"part {H.index.subset(c)} has an empty product")
    return Fraction(H.count(c), den)


def preplus(G: Complex, part: int, v: int, I: Iterable[int]) -> Complex:
    """``G^{I_v}``: restrict ``G`` by the union of the ``v``-neighbourhood parts indexed by ``I``.

    A copy ``S`` in ``I`` not containing ``part`` contributes ``G(v)_S`` (read from the
    copy above ``S`` and ``part``); a copy containing ``part`` contributes ``G_S(v)``
    at the complementary copy.
    """
    idx = G.index
    I = frozenset(I)
    if not idx.is_down_closed(I):
        raise ComplexError("I must be downward closed")
    if not 0 <= v < G.ground.size(part):
        raise ComplexError(f"vertex {v} not in part {part}")
    base = idx.base_of(part)
    nb: dict[int, np.ndarray] = {}

    def add(j: int, arr: np.ndarray) -> None:
        nb[j] = nb[j] | arr if j in nb else np.array(arr, dtype=bool)

    for s in sorted(I):
        sub = idx.subset(s)
        if base in sub:
            if idx.below(s)[(base,)] != part or s not in G.parts:
                continue
            rest = tuple(i for i in sub if i != base)
            add(idx.below(s)[rest], _slice_at(G, s, part, v))
        else:
            if len(sub) == 0:
                add(s, np.ones((), dtype=bool))
                continue
            ups = [d for d in idx.above(s) if idx.size(d) == len(sub) + 1
                   and idx.below(d).get((base,)) == part and d in G.parts]
            if not ups:
                continue
            for d in ups:
                add(s, _slice_at(G, d, part, v))
    J = G.replace(nb)
    return restrict(G, J, check=False)


def _slice_at(G: Complex, c: int, part: int, v: int) -> np.ndarray:
    axes = G.index.axes(c)
    sl = [slice(None)] * len(axes)
    sl[axes.index(part)] = int(v)
    return np.array(G.parts[c][tuple(sl)], dtype=bool)


@dataclass
class MarkedComplex:
    complex: Complex
    marks: dict[int, np.ndarray]

    def __post_init__(self) -> None:
        k = self.complex.k
        fixed = {}
        for c, m in self.marks.items():
            m = np.asarray(m, dtype=bool)
            if self.complex.index.size(c) != k:
                raise ComplexError("marks live only on top-level parts")
            if np.any(m & ~self.complex.part(c)):
                raise ComplexError("marks must be edges of the complex")
            m.flags.writeable = False
            fixed[int(c)] = m
        self.marks = fixed

    @classmethod
    def unmarked(cls, G: Complex) -> "MarkedComplex":
        return cls(G, {})

    def mark(self, c: int) -> np.ndarray:
        m = self.marks.get(c)
        return np.zeros(self.complex.shape(c), dtype=bool) if m is None else m

    def unmarked_part(self, c: int) -> np.ndarray:
        return self.complex.part(c) & ~self.mark(c)

    def induced(self, keep: Mapping[int, Sequence[int]]) -> "MarkedComplex":
        G = self.complex.induced(keep)
        idx = G.index
        keep_arr = {p: np.asarray(sorted(keep.get(p, range(self.complex.ground.size(p)))), dtype=np.intp)
                    for p in self.complex.ground.parts}
        marks = {c: m[np.ix_(*[keep_arr[p] for p in idx.axes(c)])] for c, m in self.marks.items()}
        return MarkedComplex(G, marks)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MarkedComplex) or self.complex != other.complex:
            return False
        cs = set(self.marks) | set(other.marks)
        return all(np.array_equal(self.mark(c), other.mark(c)) for c in cs)
