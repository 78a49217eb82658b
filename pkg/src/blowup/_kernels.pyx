# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backtracking kernels; see _kernels_py for the reference versions."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


def hom_count(domains, constraints):
    """Count satisfying assignments by depth-first search with early pruning."""
    cdef Py_ssize_t m = len(domains)
    cdef Py_ssize_t nc, c, i, v, depth, pos, off
    cdef long long total = 0
    for arr, vs in constraints:
        if len(vs) == 0 and not bool(arr):
            return 0
    cons = [(np.ascontiguousarray(arr, dtype=np.uint8).ravel(), tuple(vs), np.asarray(arr).shape)
            for arr, vs in constraints if len(vs)]
    if m == 0:
        return 1
    nc = len(cons)
    # constraint c is checked once its last variable is assigned
    cdef cnp.int64_t[:] dom = np.asarray(domains, dtype=np.int64)
    flat = np.concatenate([a for a, _, _ in cons]) if nc else np.zeros(1, np.uint8)
    cdef cnp.uint8_t[:] data = flat
    offs = np.zeros(nc + 1, dtype=np.int64)
    arity = np.zeros(nc, dtype=np.int64)
    trig = np.zeros(nc, dtype=np.int64)
    maxa = max([len(vs) for _, vs, _ in cons], default=1)
    vars_ = np.zeros((max(nc, 1), maxa), dtype=np.int64)
    strides = np.zeros((max(nc, 1), maxa), dtype=np.int64)
    for c in range(nc):
        a, vs, shape = cons[c]
        offs[c + 1] = offs[c] + a.size
        arity[c] = len(vs)
        trig[c] = max(vs)
        st = 1
        for i in range(len(vs) - 1, -1, -1):
            vars_[c, i] = vs[i]
            strides[c, i] = st
            st *= shape[i]
    cdef cnp.int64_t[:] coff = offs
    cdef cnp.int64_t[:] car = arity
    cdef cnp.int64_t[:, :] cv = vars_
    cdef cnp.int64_t[:, :] cs = strides
    order = np.argsort(trig, kind="stable")
    starts = np.searchsorted(trig[order], np.arange(m + 1))
    cdef cnp.int64_t[:] cord = order.astype(np.int64)
    cdef cnp.int64_t[:] cstart = starts.astype(np.int64)
    cdef long long *val = <long long *> malloc(m * sizeof(long long))
    cdef bint good
    if val == NULL:
        raise MemoryError()
    try:
        for i in range(m):
            val[i] = -1
        depth = 0
        while depth >= 0:
            val[depth] += 1
            if val[depth] >= dom[depth]:
                val[depth] = -1
                depth -= 1
                continue
            good = True
            for i in range(cstart[depth], cstart[depth + 1]):
                c = cord[i]
                pos = 0
                for v in range(car[c]):
                    pos += val[cv[c, v]] * cs[c, v]
                if data[coff[c] + pos] == 0:
                    good = False
                    break
            if not good:
                continue
            if depth == m - 1:
                total += 1
            else:
                depth += 1
    finally:
        free(val)
    return int(total)


def pair_deviation_exact(adj, double min_star, double density):
    """Gray-code sweep over row subsets with sorted column degrees."""
    a = np.ascontiguousarray(adj, dtype=np.int64)
    cdef cnp.int64_t[:, :] g = a
    cdef Py_ssize_t na = a.shape[0], nb = a.shape[1]
    cdef long long nmask, step, gray, prev, changed, mask, size = 0
    cdef Py_ssize_t bit, b, s, i, j
    cdef double best = 0.0, dv, area
    cdef long long best_mask = 0, best_s = 0, best_sign = 0, acc
    if na == 0 or nb == 0:
        return 0.0, 0, 0, 0
    cdef cnp.int64_t[:] cnt = np.zeros(nb, dtype=np.int64)
    cdef cnp.int64_t[:] srt = np.zeros(nb, dtype=np.int64)
    cdef long long tmp
    nmask = 1 << na
    prev = 0
    for step in range(1, nmask):
        gray = step ^ (step >> 1)
        changed = gray ^ prev
        bit = 0
        while (changed >> bit) != 1:
            bit += 1
        if gray & changed:
            size += 1
            for b in range(nb):
                cnt[b] += g[bit, b]
        else:
            size -= 1
            for b in range(nb):
                cnt[b] -= g[bit, b]
        prev = gray
        for b in range(nb):
            srt[b] = cnt[b]
        for i in range(1, nb):
            tmp = srt[i]
            j = i - 1
            while j >= 0 and srt[j] > tmp:
                srt[j + 1] = srt[j]
                j -= 1
            srt[j + 1] = tmp
        acc = 0
        for s in range(nb):
            acc += srt[s]
            area = size * (s + 1)
            if area <= min_star:
                continue
            dv = density - acc / area
            if dv > best:
                best, best_mask, best_s, best_sign = dv, gray, s + 1, -1
        acc = 0
        for s in range(nb):
            acc += srt[nb - 1 - s]
            area = size * (s + 1)
            if area <= min_star:
                continue
            dv = acc / area - density
            if dv > best:
                best, best_mask, best_s, best_sign = dv, gray, s + 1, 1
    return float(best), int(best_mask), int(best_s), int(best_sign)
