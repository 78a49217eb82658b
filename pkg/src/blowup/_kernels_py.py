"""Pure-Python/numpy versions of the compiled kernels."""
from __future__ import annotations

import numpy as np


def hom_count(domains, constraints) -> int:
    """Number of assignments ``var -> range(domains[var])`` satisfying every constraint.

    ``constraints`` is a list of ``(bool array, variable tuple)``; the array is
    indexed by the values of those variables in order.  Counted by tensor
    contraction, so the result is exact for any size that fits in int64.
    """
    m = len(domains)
    if m == 0:
        return int(all(bool(arr) for arr, vs in constraints if not vs))
    letters = [chr(ord("a") + i) if i < 26 else chr(ord("A") + i - 26) for i in range(m)]
    ops, subs = [], []
    for arr, vs in constraints:
        if not vs:
            if not bool(arr):
                return 0
            continue
        # repeated variables inside one constraint take the diagonal
        uniq = sorted(set(vs), key=vs.index)
        a = np.asarray(arr, dtype=np.int64)
        if len(uniq) != len(vs):
            a = _diagonal(a, vs, uniq)
        ops.append(a)
        subs.append("".join(letters[v] for v in uniq))
    for v in range(m):
        ops.append(np.ones(domains[v], dtype=np.int64))
        subs.append(letters[v])
    expr = ",".join(subs) + "->"
    return int(np.einsum(expr, *ops, optimize="greedy"))


def _diagonal(a: np.ndarray, vs, uniq) -> np.ndarray:
    grids = np.indices(tuple(a.shape[vs.index(u)] for u in uniq))
    idx = tuple(grids[uniq.index(v)] for v in vs)
    return a[idx]


def pair_deviation_exact(adj: np.ndarray, min_star: float, density: float) -> tuple[float, int, int, int]:
    """Largest ``|d(A, B) - density|`` over vertex subsets with ``|A||B| > min_star``.

    Enumerates every ``A`` on the row side; for a fixed ``A`` the best ``B`` of
    each size is a prefix of the columns sorted by degree into ``A``.  Returns
    ``(deviation, row mask, column count, sign)`` where sign +1 means the top
    columns and -1 the bottom ones.
    """
    adj = np.asarray(adj, dtype=np.int64)
    na, nb = adj.shape
    if na == 0 or nb == 0:
        return 0.0, 0, 0, 0
    masks = np.arange(1, 1 << na, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(na)) & 1).astype(np.int64)
    sizes = bits.sum(axis=1)
    counts = bits @ adj
    counts.sort(axis=1)
    s = np.arange(1, nb + 1)
    low = np.cumsum(counts, axis=1)
    high = np.cumsum(counts[:, ::-1], axis=1)
    area = sizes[:, None] * s[None, :]
    ok = area > min_star
    dev_hi = np.where(ok, high / area - density, -np.inf)
    dev_lo = np.where(ok, density - low / area, -np.inf)
    best = 0.0, 0, 0, 0
    if ok.any():
        i, j = np.unravel_index(np.argmax(dev_hi), dev_hi.shape)
        if dev_hi[i, j] > best[0]:
            best = float(dev_hi[i, j]), int(masks[i]), int(j + 1), 1
        i, j = np.unravel_index(np.argmax(dev_lo), dev_lo.shape)
        if dev_lo[i, j] > best[0]:
            best = float(dev_lo[i, j]), int(masks[i]), int(j + 1), -1
    return best
