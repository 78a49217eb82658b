"""From-scratch free sets for a partial embedding, written without the engine's bookkeeping.

A tuple P over the vertices of S is free when
  * it lies in G restricted by the prescribed positions,
  * embedded vertices of S sit at their images and other coordinates avoid
    images already used in their part,
  * every simplex E of H whose vertices outside S are all embedded maps into G
    once S is sent to P.
"""
from __future__ import annotations

from itertools import combinations
from typing import Mapping

import numpy as np

from ..complex import Complex, ComplexError, MarkedComplex, _lift
from .engine import gamma_sets

Name = tuple


def _simplices(H: Complex) -> dict[tuple, int]:
    """Vertex-name tuples (in copy axis order) of every nonempty simplex, with their copy."""
    out = {}
    for c, ords in H.simplices():
        axes = H.index.axes(c)
        if not axes:
            continue
        out[tuple(zip(axes, ords))] = c
    return out


def _restricted(G: Complex, gs: Mapping[tuple, np.ndarray], names: tuple, c: int) -> np.ndarray:
    axes = G.index.axes(c)
    arr = G.part(c).copy()
    for m in range(1, len(names) + 1):
        for sub in combinations(names, m):
            g = gs.get(tuple(sorted(sub)))
            if g is not None:
                arr &= _lift(g, [p for p, _ in sub], axes)
    return arr


def oracle_free_sets(H: Complex, GM: MarkedComplex | Complex, gamma: Mapping | None,
                     phi: Mapping[Name, int]) -> tuple[dict[tuple, np.ndarray], dict[tuple, np.ndarray]]:
    """Free sets and marked subsets for the partial map ``phi: (part, ordinal) -> image``.

    Returns ``(F, M)``: ``F`` keyed by every simplex of H, ``M`` keyed by every
    top-level simplex E with at least one unembedded vertex and holding the
    marked part of the free set of those vertices.
    """
    if isinstance(GM, Complex):
        GM = MarkedComplex.unmarked(GM)
    G = GM.complex
    gs = gamma_sets(gamma)
    simp = _simplices(H)
    base = {names: _restricted(G, gs, names, c) for names, c in simp.items()}

    images: dict[int, list[tuple[Name, int]]] = {}
    for (p, o), y in phi.items():
        images.setdefault(p, []).append(((p, o), int(y)))
    for p, lst in images.items():
        ys = [y for _, y in lst]
        if len(set(ys)) != len(ys):
            raise ComplexError(f"partial map is not injective on part {p}")
    for names in simp:
        if all(v in phi for v in names):
            if not base[names][tuple(phi[v] for v in names)]:
                raise ComplexError(f"partial map sends {names} outside G")

    F = {}
    for names, c in simp.items():
        axes = G.index.axes(c)
        arr = base[names].copy()
        here = set(names)
        for a, v in enumerate(names):
            idx = [slice(None)] * len(names)
            if v in phi:
                keep = np.zeros(arr.shape[a], dtype=bool)
                keep[phi[v]] = True
                arr &= _lift(keep, [axes[a]], axes)
                continue
            for z, y in images.get(axes[a], []):
                if z != v:
                    idx[a] = y
                    arr[tuple(idx)] = False
        for other, oc in simp.items():
            inside = [v for v in other if v in here]
            outside = [v for v in other if v not in here]
            if not inside or not outside or any(v not in phi for v in outside):
                continue
            oax = G.index.axes(oc)
            sl = tuple(phi[v] if v not in here else slice(None) for v in other)
            cond = base[other][sl]
            arr &= _lift(cond, [p for p, _ in inside], axes)
        F[names] = arr

    k = G.k
    M = {}
    for names, c in simp.items():
        if len(names) != k:
            continue
        rest = tuple(v for v in names if v not in phi)
        if not rest:
            continue
        mark = GM.mark(c)
        sl = tuple(phi[v] if v in phi else slice(None) for v in names)
        M[names] = mark[sl] & F[rest]
    return F, M
