"""Minimum-weight lookup decoding for small CSS codes.

The X and Z sectors are decoded independently. For each sector the table
maps a syndrome (check ``i`` in bit ``i``) to the lowest-weight error with
that syndrome; ties go to the lexicographically smallest sorted support.
Patterns that no error produces (possible only with measurement faults)
are sent to the nearest producible syndrome in Hamming distance, then by
weight, then by the same support order.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from .pauli import CssCode, PauliOp, Syndrome, gf2_rank

MAX_TABLE_ENTRIES = 1 << 24


class TableTooLarge(ValueError):
    pass


def _columns(rows: tuple, n: int) -> list[int]:
    cols = []
    for q in range(n):
        c = 0
        for i, r in enumerate(rows):
            if (r >> q) & 1:
                c |= 1 << i
        cols.append(c)
    return cols


def _sector_table(rows: tuple, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(correction per pattern, weight per pattern) for one sector."""
    m = len(rows)
    size = 1 << m
    target = 1 << gf2_rank(rows)
    cols = np.array(_columns(rows, n), dtype=np.int64)
    corr = np.full(size, -1, dtype=np.int64)
    wt = np.full(size, -1, dtype=np.int64)
    # producible syndromes in (weight, sorted support) order
    order_syn: list[int] = []
    found = 0
    for w in range(n + 1):
        if found == target:
            break
        if w == 0:
            corr[0], wt[0] = 0, 0
            order_syn.append(0)
            found = 1
            continue
        combos = np.array(list(combinations(range(n), w)), dtype=np.int64)
        syn = np.bitwise_xor.reduce(cols[combos], axis=1)
        err = np.bitwise_or.reduce(np.left_shift(np.int64(1), combos), axis=1)
        uniq, first = np.unique(syn, return_index=True)
        keep = corr[uniq] < 0
        uniq, first = uniq[keep], first[keep]
        # np.unique sorts by syndrome; restore support order for tie-breaking among new entries
        sel = np.sort(first)
        for idx in sel:
            s = int(syn[idx])
            corr[s] = err[idx]
            wt[s] = w
            order_syn.append(s)
        found += len(sel)
    valid = np.array(order_syn, dtype=np.int64)
    missing = np.nonzero(corr < 0)[0]
    if len(missing):
        # nearest producible syndrome; valid is already sorted by (weight, support)
        chunk = max(1, (1 << 22) // max(1, len(valid)))
        for start in range(0, len(missing), chunk):
            pats = missing[start:start + chunk]
            dist = np.bitwise_count((pats[:, None] ^ valid[None, :]).astype(np.uint64)).astype(np.int64)
            key = dist * (n + 1) + wt[valid][None, :]
            pick = valid[np.argmin(key, axis=1)]
            corr[pats] = corr[pick]
            wt[pats] = wt[pick]
    return corr, wt


class LookupDecoder:
    def __init__(self, code: CssCode):
        mx, mz = len(code.hx_rows), len(code.hz_rows)
        if (1 << mx) + (1 << mz) > MAX_TABLE_ENTRIES:
            raise TableTooLarge(f"syndrome tables need 2^{mx} + 2^{mz} entries")
        if code.n > 62:
            raise TableTooLarge("lookup tables store corrections in 64-bit words")
        self.code = code
        self.mx, self.mz = mx, mz
        # Z errors are seen by X checks and vice versa
        self.z_table, self.z_weight = _sector_table(code.hx_rows, code.n)
        self.x_table, self.x_weight = _sector_table(code.hz_rows, code.n)

    def split(self, s: Syndrome) -> tuple[int, int]:
        bits = s.bits
        sx = sum(b << i for i, b in enumerate(bits[: self.mx]))
        sz = sum(b << i for i, b in enumerate(bits[self.mx:]))
        return sx, sz

    def __call__(self, s: Syndrome) -> PauliOp:
        if len(s) != self.mx + self.mz:
            raise ValueError("syndrome length does not match the code")
        sx, sz = self.split(s)
        return PauliOp(self.code.n, int(self.x_table[sz]), int(self.z_table[sx]))

    decode = __call__

    def decode_ints(self, sx, sz):
        """Vectorised: X-check pattern(s) and Z-check pattern(s) -> (x correction, z correction)."""
        return self.x_table[np.asarray(sz, dtype=np.int64)], self.z_table[np.asarray(sx, dtype=np.int64)]


@lru_cache(maxsize=16)
def _cached(code_id: int, code: CssCode) -> LookupDecoder:
    return LookupDecoder(code)


def lookup_minweight_decoder(code: CssCode) -> LookupDecoder:
    return _cached(id(code), code)
