"""Stabilizer tableau simulation (Aaronson-Gottesman, destabilizer form).

Rows 0..n-1 are destabilizers, rows n..2n-1 stabilizers, each stored as
packed x/z bit words plus a sign bit. A row (x, z, r) stands for
(-1)^r times the tensor product with Y where x = z = 1; conversion to
:class:`PauliOp` (phase i^p on X^x Z^z) adds one factor of i per Y.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .pauli import PauliOp, gf2_rank


class InconsistentStabilizers(ValueError):
    pass


def _words(n: int) -> int:
    return max(1, (n + 63) // 64)


def _pack(v: int, w: int) -> np.ndarray:
    out = np.empty(w, dtype=np.uint64)
    for k in range(w):
        out[k] = (v >> (64 * k)) & 0xFFFFFFFFFFFFFFFF
    return out


def _unpack(words: np.ndarray) -> int:
    return sum(int(v) << (64 * k) for k, v in enumerate(words))


def _popcount(v: int) -> int:
    return bin(v).count("1")


def pauli_to_row(p: PauliOp) -> tuple[int, int, int]:
    """(x, z, r) with p = (-1)^r * prod of X/Y/Z letters; p must be Hermitian."""
    k = _popcount(p.x & p.z)
    d = (p.phase - k) % 4
    if d % 2:
        raise ValueError("non-Hermitian Pauli has no tableau row")
    return p.x, p.z, d // 2


def row_to_pauli(n: int, x: int, z: int, r: int) -> PauliOp:
    return PauliOp(n, x, z, 2 * r + _popcount(x & z))


class Tableau:
    def __init__(self, n: int):
        self.n = n
        self.w = _words(n)
        self.xs = np.zeros((2 * n, self.w), dtype=np.uint64)
        self.zs = np.zeros((2 * n, self.w), dtype=np.uint64)
        self.rs = np.zeros(2 * n, dtype=np.uint8)
        for q in range(n):
            self._set(self.xs, q, q, 1)
            self._set(self.zs, n + q, q, 1)

    # bit helpers ---------------------------------------------------------
    @staticmethod
    def _set(arr, row, q, bit):
        w, b = divmod(q, 64)
        mask = np.uint64(1 << b)
        if bit:
            arr[row, w] |= mask
        else:
            arr[row, w] &= ~mask

    def _col(self, arr, q) -> np.ndarray:
        w, b = divmod(q, 64)
        return ((arr[:, w] >> np.uint64(b)) & np.uint64(1)).astype(np.uint8)

    def _flip_col(self, arr, q, rows_mask: np.ndarray) -> None:
        w, b = divmod(q, 64)
        arr[:, w] ^= rows_mask.astype(np.uint64) << np.uint64(b)

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n, t.w = self.n, self.w
        t.xs, t.zs, t.rs = self.xs.copy(), self.zs.copy(), self.rs.copy()
        return t

    # Clifford gates -------------------------------------------------------
    def h(self, q: int) -> None:
        x, z = self._col(self.xs, q), self._col(self.zs, q)
        self.rs ^= x & z
        diff = x ^ z
        self._flip_col(self.xs, q, diff)
        self._flip_col(self.zs, q, diff)

    def s(self, q: int) -> None:
        x, z = self._col(self.xs, q), self._col(self.zs, q)
        self.rs ^= x & z
        self._flip_col(self.zs, q, x)

    def x(self, q: int) -> None:
        self.rs ^= self._col(self.zs, q)

    def z(self, q: int) -> None:
        self.rs ^= self._col(self.xs, q)

    def y(self, q: int) -> None:
        self.rs ^= self._col(self.xs, q) ^ self._col(self.zs, q)

    def cnot(self, c: int, t: int) -> None:
        if c == t:
            raise ValueError("control equals target")
        xc, zc = self._col(self.xs, c), self._col(self.zs, c)
        xt, zt = self._col(self.xs, t), self._col(self.zs, t)
        self.rs ^= xc & zt & (xt ^ zc ^ 1)
        self._flip_col(self.xs, t, xc)
        self._flip_col(self.zs, c, zt)

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cnot(a, b)
        self.h(b)

    def apply_pauli(self, p: PauliOp) -> None:
        """Conjugate the state by p (signs of anticommuting rows flip)."""
        self.rs ^= self._anticommutes(p)

    # measurement ----------------------------------------------------------
    def _anticommutes(self, p: PauliOp) -> np.ndarray:
        px, pz = _pack(p.x, self.w), _pack(p.z, self.w)
        par = kernels.popcount_rows((self.xs & pz) ^ (self.zs & px))
        return (par & 1).astype(np.uint8)

    def _product_sign(self, rows) -> tuple[int, int, int]:
        """(x, z, r) of the ordered product of the given stabilizer rows."""
        sx = np.zeros(self.w, dtype=np.uint64)
        sz = np.zeros(self.w, dtype=np.uint64)
        r = 0
        for i in rows:
            g = kernels.rowsum_phase(sx, sz, self.xs[i], self.zs[i])
            r = ((2 * r + 2 * int(self.rs[i]) + g) % 4) // 2
            sx ^= self.xs[i]
            sz ^= self.zs[i]
        return _unpack(sx), _unpack(sz), r

    def measure_pauli(self, p: PauliOp, rng: np.random.Generator | None = None, forced: int | None = None) -> tuple[int, bool]:
        """Measure the Hermitian Pauli p; returns (outcome bit, was_random).

        Outcome 0 means eigenvalue +1. ``forced`` fixes a random outcome and
        raises if it contradicts a deterministic one.
        """
        px, pz, pr = pauli_to_row(p)
        n = self.n
        anti = self._anticommutes(p)
        stab_anti = np.nonzero(anti[n:])[0]
        if len(stab_anti):
            piv = n + int(stab_anti[0])
            others = np.array([i for i in np.nonzero(anti)[0] if i != piv], dtype=np.int64)
            kernels.rowsum_into(self.xs, self.zs, self.rs, others, piv)
            self.xs[piv - n], self.zs[piv - n], self.rs[piv - n] = self.xs[piv], self.zs[piv], self.rs[piv]
            if forced is not None:
                m = int(forced)
            elif rng is not None:
                m = int(rng.integers(2))
            else:
                raise ValueError("random outcome needs an rng or a forced value")
            self.xs[piv] = _pack(px, self.w)
            self.zs[piv] = _pack(pz, self.w)
            self.rs[piv] = pr ^ m
            return m, True
        rows = [n + int(i) for i in np.nonzero(anti[:n])[0]]
        sx, sz, r = self._product_sign(rows)
        if (sx, sz) != (px, pz):
            raise RuntimeError("stabilizer product does not reproduce the measured Pauli")
        m = r ^ pr
        if forced is not None and int(forced) != m:
            raise InconsistentStabilizers(f"deterministic outcome {m} contradicts forced value {forced}")
        return m, False

    def expectation(self, p: PauliOp) -> int:
        """+1, -1, or 0 when p anticommutes with some stabilizer."""
        anti = self._anticommutes(p)
        if anti[self.n:].any():
            return 0
        px, pz, pr = pauli_to_row(p)
        rows = [self.n + int(i) for i in np.nonzero(anti[: self.n])[0]]
        _, _, r = self._product_sign(rows)
        return 1 - 2 * (r ^ pr)

    def measure_z(self, q: int, rng=None, forced=None) -> int:
        return self.measure_pauli(PauliOp(self.n, 0, 1 << q), rng, forced)[0]

    def measure_x(self, q: int, rng=None, forced=None) -> int:
        return self.measure_pauli(PauliOp(self.n, 1 << q, 0), rng, forced)[0]

    def reset(self, q: int, basis: str = "Z", rng=None) -> None:
        """Prepare |0> (basis Z) or |+> (basis X) on q, discarding its state."""
        m = self.measure_z(q, rng if rng is not None else np.random.default_rng(0))
        if m:
            self.x(q)
        if basis == "X":
            self.h(q)

    def stabilizers(self) -> list[PauliOp]:
        n = self.n
        return [row_to_pauli(n, _unpack(self.xs[i]), _unpack(self.zs[i]), int(self.rs[i])) for i in range(n, 2 * n)]

    @classmethod
    def from_stabilizers(cls, generators: list[PauliOp]) -> "Tableau":
        """The stabilizer state fixed by n independent commuting Hermitian generators."""
        if not generators:
            raise ValueError("no generators")
        n = generators[0].n
        if len(generators) != n:
            raise ValueError(f"need exactly {n} generators, got {len(generators)}")
        if gf2_rank([(g.x << n) | g.z for g in generators]) != n:
            raise InconsistentStabilizers("generators are dependent")
        t = cls(n)
        wrong = []
        for g in generators:
            m, _ = t.measure_pauli(g, forced=0) if t.expectation(g) == 0 else (int(t.expectation(g) == -1), False)
            wrong.append(m)
        if any(wrong):
            t._flip_signs(generators, wrong)
        for g in generators:
            if t.expectation(g) != 1:
                raise InconsistentStabilizers("generators are dependent or do not commute")
        return t

    def _flip_signs(self, generators: list[PauliOp], flips: list[int]) -> None:
        """Apply a product of destabilizers that flips exactly the flagged generators."""
        n = self.n
        # m[j, k] = 1 when generator j uses stabilizer row k
        m = np.array([self._anticommutes(g)[:n] for g in generators], dtype=np.uint8)
        aug = np.concatenate([m, np.array(flips, dtype=np.uint8)[:, None]], axis=1)
        row = 0
        pivots = []
        for col in range(n):
            hit = np.nonzero(aug[row:, col])[0]
            if not len(hit):
                continue
            r = row + int(hit[0])
            aug[[row, r]] = aug[[r, row]]
            for other in np.nonzero(aug[:, col])[0]:
                if other != row:
                    aug[other] ^= aug[row]
            pivots.append(col)
            row += 1
        if row < len(generators):
            raise InconsistentStabilizers("generators are dependent")
        c = np.zeros(n, dtype=np.uint8)
        for r, col in enumerate(pivots):
            c[col] = aug[r, n]
        x = z = 0
        for k in np.nonzero(c)[0]:
            x ^= _unpack(self.xs[k])
            z ^= _unpack(self.zs[k])
        self.apply_pauli(PauliOp(n, x, z, _popcount(x & z)))

    def to_statevector(self) -> np.ndarray:
        """Dense state (qubit j at basis-index bit j); small n only."""
        if self.n > 12:
            raise ValueError("dense conversion capped at 12 qubits")
        dim = 1 << self.n
        proj = np.eye(dim, dtype=complex)
        for g in self.stabilizers():
            proj = proj @ (np.eye(dim) + g.to_matrix()) / 2
        col = int(np.argmax(np.linalg.norm(proj, axis=0)))
        v = proj[:, col]
        return v / np.linalg.norm(v)
