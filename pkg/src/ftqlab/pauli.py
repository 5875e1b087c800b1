"""Symplectic Pauli algebra and CSS code machinery.

Paulis are stored as a pair of Python integers used as bit vectors, qubit 0
in the least significant bit, plus a phase exponent so that

    P = i**phase * prod_j X_j**x_j Z_j**z_j

With this convention Y = i*X*Z has x = z = 1 and phase 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import kernels

__all__ = [
    "PauliOp",
    "CssCode",
    "Syndrome",
    "multiply",
    "commutes",
    "syndrome",
    "reduced_weight",
    "sector_reduced_weight",
    "logical_class",
    "GroupTooLarge",
    "MAX_SECTOR_ELEMENTS",
]

MAX_SECTOR_ELEMENTS = 1 << 20

_SINGLE = {"I": (0, 0, 0), "X": (1, 0, 0), "Z": (0, 1, 0), "Y": (1, 1, 1)}


class GroupTooLarge(ValueError):
    pass


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliOp:
    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("negative qubit count")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("bits outside the register")
        object.__setattr__(self, "phase", self.phase % 4)

    # construction helpers
    @classmethod
    def identity(cls, n: int) -> "PauliOp":
        return cls(n)

    @classmethod
    def from_string(cls, s: str) -> "PauliOp":
        """'XIZ' puts X on qubit 0 and Z on qubit 2. A leading sign is allowed."""
        phase = 0
        for prefix, ph in (("+i", 1), ("-i", 3), ("+", 0), ("-", 2), ("i", 1)):
            if s.startswith(prefix):
                phase = ph
                s = s[len(prefix):]
                break
        x = z = 0
        for j, c in enumerate(s):
            try:
                bx, bz, ph = _SINGLE[c]
            except KeyError:
                raise ValueError(f"bad Pauli letter {c!r}") from None
            x |= bx << j
            z |= bz << j
            phase += ph
        return cls(len(s), x, z, phase)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliOp":
        bx, bz, ph = _SINGLE[letter]
        return cls(n, bx << qubit, bz << qubit, ph)

    @classmethod
    def from_bits(cls, x_bits: Sequence[int], z_bits: Sequence[int], phase: int = 0) -> "PauliOp":
        if len(x_bits) != len(z_bits):
            raise ValueError("x and z bit vectors differ in length")
        return cls(len(x_bits), _pack(x_bits), _pack(z_bits), phase)

    @classmethod
    def x_type(cls, n: int, bits) -> "PauliOp":
        return cls(n, _pack(bits) if not isinstance(bits, int) else bits, 0)

    @classmethod
    def z_type(cls, n: int, bits) -> "PauliOp":
        return cls(n, 0, _pack(bits) if not isinstance(bits, int) else bits)

    # views
    @property
    def x_bits(self) -> np.ndarray:
        return _unpack(self.x, self.n)

    @property
    def z_bits(self) -> np.ndarray:
        return _unpack(self.z, self.n)

    @property
    def support(self) -> frozenset:
        s = self.x | self.z
        return frozenset(j for j in range(self.n) if (s >> j) & 1)

    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def letters(self) -> str:
        out = []
        for j in range(self.n):
            out.append("IXZY"[((self.x >> j) & 1) | (((self.z >> j) & 1) << 1)])
        return "".join(out)

    def hermitian_phase(self) -> int:
        """Phase exponent relative to the Hermitian Pauli with the same bits (0 or 2 if Hermitian)."""
        return (self.phase - _popcount(self.x & self.z)) % 4

    def __str__(self) -> str:
        sign = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.hermitian_phase()]
        return sign + self.letters()

    def __mul__(self, other: "PauliOp") -> "PauliOp":
        return multiply(self, other)

    def restrict(self, qubits: Sequence[int]) -> "PauliOp":
        x = z = 0
        for i, q in enumerate(qubits):
            x |= ((self.x >> q) & 1) << i
            z |= ((self.z >> q) & 1) << i
        return PauliOp(len(qubits), x, z, 0)

    def embed(self, n: int, qubits: Sequence[int]) -> "PauliOp":
        x = z = 0
        for i, q in enumerate(qubits):
            x |= ((self.x >> i) & 1) << q
            z |= ((self.z >> i) & 1) << q
        return PauliOp(n, x, z, self.phase)

    def to_matrix(self) -> np.ndarray:
        """Dense matrix; basis index bit j is qubit j (qubit 0 least significant)."""
        if self.n > 12:
            raise ValueError("dense cap exceeded")
        dim = 1 << self.n
        idx = np.arange(dim)
        cols = idx
        rows = idx ^ self.x
        parity = np.zeros(dim, dtype=np.int64)
        zc = idx & self.z
        for j in range(self.n):
            parity += (zc >> j) & 1
        vals = (1j ** self.phase) * (-1.0) ** (parity % 2)
        m = np.zeros((dim, dim), dtype=complex)
        m[rows, cols] = vals
        return m


def _pack(bits) -> int:
    v = 0
    for j, b in enumerate(bits):
        if int(b) & 1:
            v |= 1 << j
    return v


def _unpack(v: int, n: int) -> np.ndarray:
    return np.array([(v >> j) & 1 for j in range(n)], dtype=np.uint8)


def _check_dims(p: PauliOp, q: PauliOp) -> None:
    if p.n != q.n:
        raise ValueError(f"dimension mismatch: {p.n} vs {q.n}")


def multiply(p: PauliOp, q: PauliOp) -> PauliOp:
    _check_dims(p, q)
    # X^a Z^b X^c Z^d = (-1)^{b.c} X^{a+c} Z^{b+d}
    sign = 2 * (_popcount(p.z & q.x) & 1)
    return PauliOp(p.n, p.x ^ q.x, p.z ^ q.z, p.phase + q.phase + sign)


def commutes(p: PauliOp, q: PauliOp) -> bool:
    _check_dims(p, q)
    return (_popcount(p.x & q.z) + _popcount(p.z & q.x)) % 2 == 0


def _rows_to_ints(h: np.ndarray) -> list[int]:
    return [_pack(row) for row in h]


def gf2_rank(rows: Iterable[int]) -> int:
    return len(gf2_basis(rows))


def gf2_basis(rows: Iterable[int]) -> list[int]:
    """Independent subset-span basis (reduced so leading bits are distinct)."""
    basis: list[int] = []
    for r in rows:
        for b in basis:
            r = min(r, r ^ b)
        if r:
            basis.append(r)
    return basis


def in_span(v: int, basis: list[int]) -> bool:
    for b in basis:
        v = min(v, v ^ b)
    return v == 0


@dataclass(frozen=True)
class Syndrome:
    bits: tuple

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) & 1 for b in self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    def is_zero(self) -> bool:
        return not any(self.bits)

    def to_int(self) -> int:
        return _pack(self.bits)

    def array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class CssCode:
    """CSS code given by X- and Z-type check matrices plus logical representatives."""

    n: int
    k: int
    h_x: np.ndarray
    h_z: np.ndarray
    logical_x: tuple
    logical_z: tuple
    name: str = "css"
    hx_rows: tuple = field(init=False, repr=False)
    hz_rows: tuple = field(init=False, repr=False)

    def __post_init__(self):
        hx = np.asarray(self.h_x, dtype=np.uint8).reshape(-1, self.n) % 2
        hz = np.asarray(self.h_z, dtype=np.uint8).reshape(-1, self.n) % 2
        hx.setflags(write=False)
        hz.setflags(write=False)
        object.__setattr__(self, "h_x", hx)
        object.__setattr__(self, "h_z", hz)
        object.__setattr__(self, "logical_x", tuple(self.logical_x))
        object.__setattr__(self, "logical_z", tuple(self.logical_z))
        object.__setattr__(self, "hx_rows", tuple(_rows_to_ints(hx)))
        object.__setattr__(self, "hz_rows", tuple(_rows_to_ints(hz)))
        self._validate()

    def _validate(self) -> None:
        if self.k < 1:
            raise ValueError("k=0 codes carry no logical information")
        if len(self.logical_x) != self.k or len(self.logical_z) != self.k:
            raise ValueError("need k logical X and k logical Z operators")
        for a in self.hx_rows:
            for b in self.hz_rows:
                if _popcount(a & b) % 2:
                    raise ValueError("X and Z checks do not commute")
        gens = self.generators()
        for i in range(self.k):
            lx, lz = self.logical_x[i], self.logical_z[i]
            for op in (lx, lz):
                if op.n != self.n:
                    raise ValueError("logical operator has wrong size")
                if not all(commutes(op, g) for g in gens):
                    raise ValueError("logical operator does not commute with the stabilizer")
            for j in range(self.k):
                want = i == j
                if commutes(lx, self.logical_z[j]) == want:
                    raise ValueError(f"logical X{i} / Z{j} commutation is wrong")
                if j != i and (not commutes(lx, self.logical_x[j]) or not commutes(lz, self.logical_z[j])):
                    raise ValueError("logical operators of the same type must commute")
        rx = gf2_rank(self.hx_rows)
        rz = gf2_rank(self.hz_rows)
        if rx + rz + 2 * self.k != self.n + self.k:
            raise ValueError(f"rank count inconsistent: {rx}+{rz}+2*{self.k} != {self.n}+{self.k}")

    @property
    def num_generators(self) -> int:
        return len(self.hx_rows) + len(self.hz_rows)

    @property
    def generator_order(self) -> list[tuple[str, int]]:
        return [("X", i) for i in range(len(self.hx_rows))] + [("Z", i) for i in range(len(self.hz_rows))]

    def generators(self) -> list[PauliOp]:
        return [PauliOp(self.n, r, 0) for r in self.hx_rows] + [PauliOp(self.n, 0, r) for r in self.hz_rows]

    def stabilizer_basis(self, sector: str) -> list[int]:
        return gf2_basis(self.hx_rows if sector == "X" else self.hz_rows)

    def max_generator_weight(self) -> int:
        return max(_popcount(r) for r in self.hx_rows + self.hz_rows)

    def __repr__(self) -> str:
        return f"CssCode({self.name!r}, n={self.n}, k={self.k})"


def syndrome(code: CssCode, e: PauliOp) -> Syndrome:
    if e.n != code.n:
        raise ValueError(f"dimension mismatch: error on {e.n} qubits, code on {code.n}")
    bits = [_popcount(r & e.z) & 1 for r in code.hx_rows]
    bits += [_popcount(r & e.x) & 1 for r in code.hz_rows]
    return Syndrome(tuple(bits))


def sector_reduced_weight(v: int, basis: list[int], n: int) -> int:
    if len(basis) > 20:
        raise GroupTooLarge(f"stabilizer sector has 2^{len(basis)} elements, cap is 2^20")
    return kernels.coset_min_weight(v, basis, n)


def reduced_weight(code: CssCode, e: PauliOp) -> int:
    """max of the X- and Z-sector minimum weights over the stabilizer coset."""
    if e.n != code.n:
        raise ValueError("dimension mismatch")
    wx = sector_reduced_weight(e.x, code.stabilizer_basis("X"), code.n)
    wz = sector_reduced_weight(e.z, code.stabilizer_basis("Z"), code.n)
    return max(wx, wz)


def logical_class(code: CssCode, e: PauliOp) -> str:
    """'detectable' for nonzero syndrome, else a string over IXYZ of length k."""
    if not syndrome(code, e).is_zero():
        return "detectable"
    out = []
    for lx, lz in zip(code.logical_x, code.logical_z):
        has_x = not commutes(e, lz)
        has_z = not commutes(e, lx)
        out.append("IXZY"[has_x | (has_z << 1)])
    return "".join(out)


def weight_at_most(n: int, wmax: int) -> Iterable[PauliOp]:
    """All Paulis of weight <= wmax, ordered by weight then lexicographically."""
    letters = ("X", "Y", "Z")
    for w in range(wmax + 1):
        for qs in combinations(range(n), w):
            for choice in np.ndindex(*(3,) * w) if w else [()]:
                x = z = 0
                for q, c in zip(qs, choice):
                    bx, bz, _ = _SINGLE[letters[c]]
                    x |= bx << q
                    z |= bz << q
                yield PauliOp(n, x, z)
