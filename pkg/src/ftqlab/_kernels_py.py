"""Pure-Python/numpy implementations of the hot kernels.

Each function here has a compiled twin in ``_kernels.pyx`` with the same
signature and results; ``kernels`` picks one at import time.
"""
from __future__ import annotations

import numpy as np

INF = np.iinfo(np.int64).max // 4


def _words(v: int, nwords: int) -> np.ndarray:
    out = np.empty(nwords, dtype=np.uint64)
    mask = (1 << 64) - 1
    for w in range(nwords):
        out[w] = (v >> (64 * w)) & mask
    return out


def coset_min_weight(v: int, basis: list, n: int) -> int:
    """min popcount(v ^ s) over the span s of ``basis``."""
    nwords = max(1, (n + 63) // 64)
    span = np.zeros((1, nwords), dtype=np.uint64)
    for b in basis:
        span = np.concatenate([span, span ^ _words(b, nwords)[None, :]])
    diff = span ^ _words(v, nwords)[None, :]
    return int(np.bitwise_count(diff).sum(axis=1, dtype=np.int64).min())


def min_weight_matching(dist: np.ndarray) -> list:
    """Exact minimum-weight perfect matching by subset DP.

    Vertex 0 of each remaining subset is matched first and partners are tried
    in increasing order, so among optimal matchings the one returned has the
    lexicographically smallest sorted pair list.
    """
    m = dist.shape[0]
    if m == 0:
        return []
    if m % 2:
        raise ValueError("odd number of vertices")
    d = [[int(x) for x in row] for row in dist]
    full = (1 << m) - 1
    best = {0: 0}

    def solve(mask: int) -> int:
        if mask in best:
            return best[mask]
        low = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << low)
        val = INF
        r = rest
        while r:
            j = (r & -r).bit_length() - 1
            r &= r - 1
            c = d[low][j] + solve(rest & ~(1 << j))
            if c < val:
                val = c
        best[mask] = val
        return val

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10 * m + 100))
    try:
        solve(full)
    finally:
        sys.setrecursionlimit(old)
    pairs = []
    mask = full
    while mask:
        low = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << low)
        target = best[mask]
        r = rest
        while r:
            j = (r & -r).bit_length() - 1
            r &= r - 1
            sub = rest & ~(1 << j)
            if d[low][j] + best[sub] == target:
                pairs.append((low, j))
                mask = sub
                break
    return pairs


def rowsum_phase(x1: np.ndarray, z1: np.ndarray, x2: np.ndarray, z2: np.ndarray) -> int:
    """Sum of the CHP g-function over all qubits for P1 * P2 (rows as uint64 words)."""
    pos = (x1 & z1 & z2 & ~x2) | (x1 & ~z1 & z2 & x2) | (~x1 & z1 & x2 & ~z2)
    neg = (x1 & z1 & x2 & ~z2) | (x1 & ~z1 & z2 & ~x2) | (~x1 & z1 & x2 & z2)
    return int(np.bitwise_count(pos).sum()) - int(np.bitwise_count(neg).sum())


def rowsum_into(xs: np.ndarray, zs: np.ndarray, rs: np.ndarray, targets: np.ndarray, src: int) -> None:
    """Row h <- row h * row src for every h in targets (CHP rowsum)."""
    if len(targets) == 0:
        return
    x2, z2 = xs[src], zs[src]
    x1, z1 = xs[targets], zs[targets]
    pos = (x1 & z1 & z2 & ~x2) | (x1 & ~z1 & z2 & x2) | (~x1 & z1 & x2 & ~z2)
    neg = (x1 & z1 & x2 & ~z2) | (x1 & ~z1 & z2 & ~x2) | (~x1 & z1 & x2 & z2)
    g = np.bitwise_count(pos).sum(axis=1, dtype=np.int64) - np.bitwise_count(neg).sum(axis=1, dtype=np.int64)
    tot = 2 * rs[targets].astype(np.int64) + 2 * int(rs[src]) + g
    rs[targets] = ((tot % 4) // 2).astype(rs.dtype)
    xs[targets] = x1 ^ x2
    zs[targets] = z1 ^ z2


def popcount_rows(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).sum(axis=-1, dtype=np.int64)
