"""Splitting a cluster system into copies of F in a few orientations.

Everything here is exact rational arithmetic.  Given class sizes of ``F``
and the part sizes ``J`` of a cell, we look for a doubly stochastic matrix
``D`` with ``alpha(J) = D alpha(F)``, decompose it into permutation matrices
and shrink the decomposition to at most ``k`` orientations.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Sequence

Matrix = list[list[Fraction]]


class MajorizationError(ValueError):
    pass


def class_vector(sizes: Sequence[int]) -> tuple[Fraction, ...]:
    """Class proportions sorted ascending."""
    total = sum(sizes)
    if total <= 0:
        raise ValueError("class vector of an empty set")
    return tuple(sorted(Fraction(s, total) for s in sizes))


def precedes(a: Sequence[Fraction], b: Sequence[Fraction]) -> bool:
    """``a`` precedes ``b`` when every ascending prefix sum of ``a`` is at most that of ``b``.

    So ``b`` is the more balanced of the two.
    """
    a, b = sorted(a), sorted(b)
    if len(a) != len(b) or sum(a) != sum(b):
        return False
    sa = sb = Fraction(0)
    for x, y in zip(a[:-1], b[:-1]):
        sa += x
        sb += y
        if sa > sb:
            return False
    return True


def _identity(k: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(k)] for i in range(k)]


def _matmul(A: Matrix, B: Matrix) -> Matrix:
    return [[sum((A[i][t] * B[t][j] for t in range(len(B))), Fraction(0)) for j in range(len(B[0]))]
            for i in range(len(A))]


def apply(D: Matrix, x: Sequence[Fraction]) -> list[Fraction]:
    return [sum((D[i][j] * x[j] for j in range(len(x))), Fraction(0)) for i in range(len(D))]


def is_doubly_stochastic(D: Matrix) -> bool:
    k = len(D)
    return (all(v >= 0 for row in D for v in row)
            and all(sum(row) == 1 for row in D)
            and all(sum(D[i][j] for i in range(k)) == 1 for j in range(k)))


def t_transform_matrix(x: Sequence[Fraction], y: Sequence[Fraction]) -> Matrix:
    """Doubly stochastic ``D`` with ``x = D y``, for ``x`` more balanced than ``y``.

    Works on descending orders: repeatedly moves mass from the last
    coordinate where ``y`` is too large to the first later coordinate where
    it is too small, one two-coordinate averaging at a time.
    """
    k = len(x)
    ox = sorted(range(k), key=lambda i: (-x[i], i))
    oy = sorted(range(k), key=lambda i: (-y[i], i))
    xs = [x[i] for i in ox]
    cur = [y[i] for i in oy]
    D = _identity(k)
    for _ in range(k):
        above = [i for i in range(k) if cur[i] > xs[i]]
        if not above:
            break
        j = above[-1]
        later = [i for i in range(j + 1, k) if cur[i] < xs[i]]
        if not later:
            raise MajorizationError("class vectors are not comparable")
        m = later[0]
        delta = min(cur[j] - xs[j], xs[m] - cur[m])
        share = delta / (cur[j] - cur[m])
        T = _identity(k)
        T[j][j] = T[m][m] = 1 - share
        T[j][m] = T[m][j] = share
        cur = apply(T, cur)
        D = _matmul(T, D)
    if cur != xs:
        raise MajorizationError("class vectors are not comparable")
    # back from sorted coordinates: out[ox[a]][oy[b]] = D[a][b]
    out = [[Fraction(0)] * k for _ in range(k)]
    for a in range(k):
        for b in range(k):
            out[ox[a]][oy[b]] = D[a][b]
    return out


def birkhoff(D: Matrix) -> list[tuple[Fraction, tuple[int, ...]]]:
    """``D = sum lambda_i P_i``; each permutation ``pi`` has ``P[pi[c]][c] = 1``."""
    k = len(D)
    rest = [row[:] for row in D]
    terms = []
    while any(v for row in rest for v in row):
        for pi in permutations(range(k)):
            if all(rest[pi[c]][c] > 0 for c in range(k)):
                break
        else:
            raise ValueError("matrix is not a multiple of a doubly stochastic matrix")
        lam = min(rest[pi[c]][c] for c in range(k))
        for c in range(k):
            rest[pi[c]][c] -= lam
        terms.append((lam, tuple(pi)))
    return terms


def permuted(pi: Sequence[int], f: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Class ``c`` of ``f`` placed on part ``pi[c]``."""
    out = [Fraction(0)] * len(f)
    for c, p in enumerate(pi):
        out[p] = f[c]
    return tuple(out)


def _nullvector(cols: list[tuple[Fraction, ...]]) -> list[Fraction] | None:
    """Nonzero ``c`` with ``sum c_i cols[i] = 0``, by exact elimination."""
    rows, m = len(cols[0]), len(cols)
    A = [[cols[j][i] for j in range(m)] for i in range(rows)]
    pivots = []
    r = 0
    for col in range(m):
        piv = next((i for i in range(r, rows) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = 1 / A[r][col]
        A[r] = [v * inv for v in A[r]]
        for i in range(rows):
            if i != r and A[i][col] != 0:
                f = A[i][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(col)
        r += 1
        if r == rows:
            break
    free = [c for c in range(m) if c not in pivots]
    if not free:
        return None
    fc = free[0]
    vec = [Fraction(0)] * m
    vec[fc] = Fraction(1)
    for i, pc in enumerate(pivots):
        vec[pc] = -A[i][fc]
    return vec


def caratheodory(points: list[tuple[Fraction, ...]], weights: list[Fraction]) -> tuple[list, list]:
    """Same convex combination with at most ``dim + 1`` points (points lie on ``sum = 1``)."""
    pts, ws = list(points), list(weights)
    k = len(pts[0]) if pts else 0
    while len(pts) > k:
        c = _nullvector(pts)
        if c is None:
            break
        if not any(v > 0 for v in c):
            c = [-v for v in c]
        t = min(ws[i] / c[i] for i in range(len(c)) if c[i] > 0)
        ws = [w - t * v for w, v in zip(ws, c)]
        keep = [i for i, w in enumerate(ws) if w != 0]
        pts, ws = [pts[i] for i in keep], [ws[i] for i in keep]
    return pts, ws


@dataclass
class Orientation:
    perm: tuple[int, ...]
    mu: Fraction
    copies: int


@dataclass
class BalanceResult:
    F: tuple[int, ...]
    J: tuple[int, ...]
    D: Matrix
    birkhoff: list[tuple[Fraction, tuple[int, ...]]]
    orientations: list[Orientation]

    def counts(self) -> dict[tuple[int, ...], int]:
        return {o.perm: o.copies for o in self.orientations if o.copies}

    def used(self) -> list[int]:
        out = [0] * len(self.J)
        for o in self.orientations:
            for c, p in enumerate(o.perm):
                out[p] += o.copies * self.F[c]
        return out

    def leftover(self) -> list[int]:
        return [j - u for j, u in zip(self.J, self.used())]

    def recomposed(self) -> tuple[Fraction, ...]:
        f = [Fraction(s, sum(self.F)) for s in self.F]
        acc = [Fraction(0)] * len(self.J)
        for o in self.orientations:
            for p, v in enumerate(permuted(o.perm, f)):
                acc[p] += o.mu * v
        return tuple(acc)

    def to_dict(self) -> dict:
        return {"F": list(self.F), "J": list(self.J),
                "orientations": [{"perm": list(o.perm), "mu": str(o.mu), "copies": o.copies}
                                 for o in self.orientations]}


def balance_class_vectors(J: Sequence[int], F: Sequence[int]) -> BalanceResult:
    """Copies of ``F`` per orientation filling parts of sizes ``J`` up to a bounded leftover.

    ``J`` is indexed by part and ``F`` by class; an orientation ``perm``
    puts class ``c`` on part ``perm[c]``.
    """
    J, F = tuple(int(v) for v in J), tuple(int(v) for v in F)
    if len(J) != len(F):
        raise ValueError("J and F need the same number of classes")
    if sum(J) == 0:
        return BalanceResult(F, J, _identity(len(F)), [], [])
    f = [Fraction(s, sum(F)) for s in F]
    j = [Fraction(s, sum(J)) for s in J]
    if not precedes(f, j):
        raise MajorizationError(f"class vector of F {class_vector(F)} does not precede that of J {class_vector(J)}")
    D = t_transform_matrix(j, f)
    terms = birkhoff(D)
    merged: dict[tuple, Fraction] = {}
    rep: dict[tuple, tuple] = {}
    for lam, pi in terms:
        pt = permuted(pi, f)
        merged[pt] = merged.get(pt, Fraction(0)) + lam
        rep.setdefault(pt, pi)
    pts, ws = caratheodory(sorted(merged), [merged[p] for p in sorted(merged)])
    total, size = sum(J), sum(F)
    orients = [Orientation(rep[p], w, int(w * total // size)) for p, w in zip(pts, ws)]
    return BalanceResult(F, J, D, terms, sorted(orients, key=lambda o: o.perm))


def top_up(result: BalanceResult) -> dict[tuple[int, ...], int]:
    """Extra copies, in any orientation, that still fit in the rounding leftover."""
    left = result.leftover()
    extra: dict[tuple[int, ...], int] = {}
    k = len(result.F)
    progress = True
    while progress:
        progress = False
        for perm in permutations(range(k)):
            need = [0] * k
            for c, p in enumerate(perm):
                need[p] += result.F[c]
            if all(n <= l for n, l in zip(need, left)):
                left = [l - n for n, l in zip(need, left)]
                extra[perm] = extra.get(perm, 0) + 1
                progress = True
                break
    return extra
