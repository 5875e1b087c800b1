# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_kernels_py`` function by function."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, uint8_t, int32_t
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil

cdef int64_t INF = (<int64_t>1) << 60

from ._kernels_py import coset_min_weight as _coset_py


def coset_min_weight(v, basis, int n):
    """Gray-code walk over the span; falls back to numpy above 64 qubits."""
    if n > 64:
        return _coset_py(v, basis, n)
    cdef int r = len(basis)
    cdef uint64_t cur = <uint64_t>v
    cdef uint64_t* b = <uint64_t*>malloc(max(r, 1) * sizeof(uint64_t))
    cdef int i, best, w
    cdef uint64_t g
    cdef uint64_t total
    for i in range(r):
        b[i] = <uint64_t>basis[i]
    best = __builtin_popcountll(cur)
    total = (<uint64_t>1) << r
    with nogil:
        for g in range(1, total):
            cur ^= b[__builtin_ctzll(g)]
            w = __builtin_popcountll(cur)
            if w < best:
                best = w
    free(b)
    return best


def min_weight_matching(dist):
    """Exact minimum-weight perfect matching by subset DP (see _kernels_py)."""
    cdef int m = dist.shape[0]
    if m == 0:
        return []
    if m % 2:
        raise ValueError("odd number of vertices")
    if m > 22:
        raise ValueError("too many vertices for subset DP")
    cdef cnp.ndarray[int64_t, ndim=2] d = np.ascontiguousarray(dist, dtype=np.int64)
    cdef uint64_t full = ((<uint64_t>1) << m) - 1
    cdef cnp.ndarray[int64_t, ndim=1] best = np.full(full + 1, INF, dtype=np.int64)
    cdef uint64_t mask, rest, rr, sub
    cdef int low, j
    cdef int64_t val, c
    best[0] = 0
    with nogil:
        # only even-popcount masks matter; iterate in increasing order so subsets come first
        for mask in range(1, full + 1):
            if __builtin_popcountll(mask) & 1:
                continue
            low = __builtin_ctzll(mask)
            rest = mask & ~((<uint64_t>1) << low)
            val = INF
            rr = rest
            while rr:
                j = __builtin_ctzll(rr)
                rr &= rr - 1
                c = d[low, j] + best[rest & ~((<uint64_t>1) << j)]
                if c < val:
                    val = c
            best[mask] = val
    pairs = []
    mask = full
    while mask:
        low = __builtin_ctzll(mask)
        rest = mask & ~((<uint64_t>1) << low)
        rr = rest
        while rr:
            j = __builtin_ctzll(rr)
            rr &= rr - 1
            sub = rest & ~((<uint64_t>1) << j)
            if d[low, j] + best[sub] == best[mask]:
                pairs.append((low, j))
                mask = sub
                break
    return pairs


def rowsum_phase(cnp.ndarray[uint64_t, ndim=1] x1, cnp.ndarray[uint64_t, ndim=1] z1,
                 cnp.ndarray[uint64_t, ndim=1] x2, cnp.ndarray[uint64_t, ndim=1] z2):
    cdef Py_ssize_t w, nw = x1.shape[0]
    cdef uint64_t a, b, c, e, pos, neg
    cdef long g = 0
    for w in range(nw):
        a = x1[w]; b = z1[w]; c = x2[w]; e = z2[w]
        pos = (a & b & e & ~c) | (a & ~b & e & c) | (~a & b & c & ~e)
        neg = (a & b & c & ~e) | (a & ~b & e & ~c) | (~a & b & c & e)
        g += __builtin_popcountll(pos) - __builtin_popcountll(neg)
    return g


def rowsum_into(cnp.ndarray[uint64_t, ndim=2] xs, cnp.ndarray[uint64_t, ndim=2] zs,
                cnp.ndarray[uint8_t, ndim=1] rs, targets, Py_ssize_t src):
    cdef Py_ssize_t t, h, w, nw = xs.shape[1]
    cdef cnp.ndarray[int64_t, ndim=1] tg = np.asarray(targets, dtype=np.int64)
    cdef uint64_t a, b, c, e, pos, neg
    cdef long g
    for t in range(tg.shape[0]):
        h = tg[t]
        g = 2 * rs[h] + 2 * rs[src]
        for w in range(nw):
            a = xs[h, w]; b = zs[h, w]; c = xs[src, w]; e = zs[src, w]
            pos = (a & b & e & ~c) | (a & ~b & e & c) | (~a & b & c & ~e)
            neg = (a & b & c & ~e) | (a & ~b & e & ~c) | (~a & b & c & e)
            g += __builtin_popcountll(pos) - __builtin_popcountll(neg)
            xs[h, w] = a ^ c
            zs[h, w] = b ^ e
        rs[h] = ((g % 4 + 4) % 4) // 2


def popcount_rows(a):
    cdef cnp.ndarray[uint64_t, ndim=2] arr = np.ascontiguousarray(np.atleast_2d(a), dtype=np.uint64)
    cdef Py_ssize_t i, w
    cdef cnp.ndarray[int64_t, ndim=1] out = np.zeros(arr.shape[0], dtype=np.int64)
    for i in range(arr.shape[0]):
        for w in range(arr.shape[1]):
            out[i] += __builtin_popcountll(arr[i, w])
    if np.ndim(a) == 1:
        return out[0]
    return out
