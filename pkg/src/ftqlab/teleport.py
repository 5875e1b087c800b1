"""Logical Clifford gates by teleportation through an encoded ancilla.

The ancilla is (1 x U) applied to logical Bell pairs between two groups of
blocks. A logical Bell measurement between the data and the first group
(transversal CNOT, transversal H, Z measurements) leaves U X^b Z^a |psi> on
the second group; the correction U X^b Z^a U^dagger is a Pauli because U is
Clifford, and is applied through the stored logical representatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .circuits import Circuit, CircuitBuilder
from .decoders import lookup_minweight_decoder
from .frames import FaultPath, run_frames, run_tableau
from .pauli import CssCode, PauliOp, commutes
from .tableau import Tableau


class NotClifford(ValueError):
    pass


def _gate_image(gate: tuple, p: PauliOp) -> PauliOp:
    """g p g^dagger for one elementary Clifford gate on an m-qubit Pauli."""
    name, qs = gate[0], gate[1:]
    n = p.n
    out = PauliOp(n, 0, 0, p.phase)
    # rebuild p = i^phase prod_j X_j^x prod_j Z_j^z letter by letter through the gate
    for j in range(n):
        if (p.x >> j) & 1:
            out = out * _single_image(name, qs, n, j, "X")
    for j in range(n):
        if (p.z >> j) & 1:
            out = out * _single_image(name, qs, n, j, "Z")
    return out


def _single_image(name: str, qs: tuple, n: int, j: int, letter: str) -> PauliOp:
    x = PauliOp.single(n, j, "X")
    z = PauliOp.single(n, j, "Z")
    base = x if letter == "X" else z
    if name == "H":
        if qs[0] == j:
            return z if letter == "X" else x
        return base
    if name == "S":
        if qs[0] == j and letter == "X":
            return PauliOp.single(n, j, "Y")
        return base
    if name == "X":
        if qs[0] == j and letter == "Z":
            return PauliOp(n, 0, z.z, 2)
        return base
    if name == "Z":
        if qs[0] == j and letter == "X":
            return PauliOp(n, x.x, 0, 2)
        return base
    if name == "CNOT":
        c, t = qs
        if letter == "X" and j == c:
            return PauliOp(n, (1 << c) | (1 << t), 0)
        if letter == "Z" and j == t:
            return PauliOp(n, 0, (1 << c) | (1 << t))
        return base
    raise NotClifford(f"unknown gate {name!r}")


@dataclass(frozen=True)
class CliffordTableau:
    """Images U X_j U^dagger and U Z_j U^dagger of the single-qubit Paulis."""

    m: int
    x_images: tuple
    z_images: tuple

    @classmethod
    def identity(cls, m: int) -> "CliffordTableau":
        return cls(m, tuple(PauliOp.single(m, j, "X") for j in range(m)), tuple(PauliOp.single(m, j, "Z") for j in range(m)))

    @classmethod
    def from_gates(cls, m: int, gates) -> "CliffordTableau":
        """Gates applied left to right: ('H', q), ('S', q), ('X', q), ('Z', q), ('CNOT', c, t)."""
        u = cls.identity(m)
        for g in gates:
            for q in g[1:]:
                if not 0 <= q < m:
                    raise ValueError(f"gate {g} acts outside {m} qubits")
            u = cls(m, tuple(_gate_image(g, p) for p in u.x_images), tuple(_gate_image(g, p) for p in u.z_images))
        u.check()
        return u

    @classmethod
    def random(cls, m: int, rng: np.random.Generator, depth: int | None = None) -> "CliffordTableau":
        depth = 4 * m * m + 4 if depth is None else depth
        gates = []
        for _ in range(depth):
            kind = rng.integers(5 if m > 1 else 4)
            q = int(rng.integers(m))
            if kind == 4:
                t = int(rng.integers(m - 1))
                gates.append(("CNOT", q, t + (t >= q)))
            else:
                gates.append((("H", "S", "X", "Z")[kind], q))
        return cls.from_gates(m, gates)

    def check(self) -> None:
        """Symplectic and Hermitian: the images satisfy the Pauli commutation relations."""
        imgs = list(self.x_images) + list(self.z_images)
        if len(self.x_images) != self.m or len(self.z_images) != self.m:
            raise NotClifford("need m X images and m Z images")
        for p in imgs:
            if p.n != self.m or p.hermitian_phase() % 2:
                raise NotClifford("images must be Hermitian Paulis on m qubits")
            if p.weight() == 0:
                raise NotClifford("identity image")
        for i in range(self.m):
            for j in range(self.m):
                if commutes(self.x_images[i], self.z_images[j]) != (i != j):
                    raise NotClifford(f"X{i} and Z{j} images have the wrong commutation")
                if not commutes(self.x_images[i], self.x_images[j]) or not commutes(self.z_images[i], self.z_images[j]):
                    raise NotClifford("images of the same type must commute")

    def conj(self, p: PauliOp) -> PauliOp:
        """U p U^dagger."""
        if p.n != self.m:
            raise ValueError("Pauli size differs from the tableau")
        out = PauliOp(self.m, 0, 0, p.phase)
        for j in range(self.m):
            if (p.x >> j) & 1:
                out = out * self.x_images[j]
        for j in range(self.m):
            if (p.z >> j) & 1:
                out = out * self.z_images[j]
        return out


NAMED_GATES = {
    "I": lambda m: [],
    "X1": lambda m: [("X", 0)],
    "Z1": lambda m: [("Z", 0)],
    "X2": lambda m: [("X", 1)],
    "Z2": lambda m: [("Z", 1)],
    "H1": lambda m: [("H", 0)],
    "S1": lambda m: [("S", 0)],
    "CNOT12": lambda m: [("CNOT", 0, 1)],
    "CNOT21": lambda m: [("CNOT", 1, 0)],
}


def gate_set(name: str, m: int) -> dict[str, CliffordTableau]:
    """'paulis' (all 4^m logical Paulis), 'cnot', 'clifford' (paulis + CNOTs + H, S) or one named gate."""
    out: dict[str, CliffordTableau] = {}
    if name in ("paulis", "default", "clifford"):
        for code in range(4**m):
            gates = []
            label = ""
            for j in range(m):
                letter = "IXZY"[(code >> (2 * j)) & 3]
                label += letter
                if letter in "XY":
                    gates.append(("X", j))
                if letter in "ZY":
                    gates.append(("Z", j))
            out[label] = CliffordTableau.from_gates(m, gates)
    if name in ("cnot", "default", "clifford") and m >= 2:
        out["CNOT12"] = CliffordTableau.from_gates(m, NAMED_GATES["CNOT12"](m))
        out["CNOT21"] = CliffordTableau.from_gates(m, NAMED_GATES["CNOT21"](m))
    if name == "clifford":
        out["H1"] = CliffordTableau.from_gates(m, [("H", 0)])
        out["S1"] = CliffordTableau.from_gates(m, [("S", 0)])
    if name in NAMED_GATES:
        out[name] = CliffordTableau.from_gates(m, NAMED_GATES[name](m))
    if not out:
        raise ValueError(f"unknown gate set {name!r}")
    return out


# layout ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AncillaSpec:
    """U on blocks*k logical qubits, carried by `blocks` data blocks of `code`."""

    code: CssCode
    u: CliffordTableau
    blocks: int = 1

    def __post_init__(self):
        if self.blocks not in (1, 2):
            raise ValueError("one or two blocks per group")
        if self.u.m != self.blocks * self.code.k:
            raise ValueError(f"U acts on {self.u.m} logical qubits, blocks carry {self.blocks * self.code.k}")
        self.u.check()

    @property
    def m(self) -> int:
        return self.u.m

    @property
    def n_wires(self) -> int:
        return 3 * self.blocks * self.code.n

    def group(self, g: int) -> list[list[int]]:
        """Wires of group g (0 data, 1 first ancilla half, 2 output half), one list per block."""
        n = self.code.n
        return [list(range((g * self.blocks + b) * n, (g * self.blocks + b + 1) * n)) for b in range(self.blocks)]

    def logical_on(self, group: int, p: PauliOp) -> PauliOp:
        """Physical representative on the given group of an m-qubit logical Pauli."""
        code = self.code
        k = code.k
        x = z = 0
        for i in range(self.m):
            wires = self.group(group)[i // k]
            lx = code.logical_x[i % k]
            lz = code.logical_z[i % k]
            if (p.x >> i) & 1:
                x ^= lx.embed(self.n_wires, wires).x
            if (p.z >> i) & 1:
                z ^= lz.embed(self.n_wires, wires).z
        return PauliOp(self.n_wires, x, z, p.phase)

    def block_generators(self, groups) -> list[PauliOp]:
        out = []
        code = self.code
        for g in groups:
            for wires in self.group(g):
                for r in code.stabilizer_basis("X"):
                    out.append(PauliOp(code.n, r, 0).embed(self.n_wires, wires))
                for r in code.stabilizer_basis("Z"):
                    out.append(PauliOp(code.n, 0, r).embed(self.n_wires, wires))
        return out


def _logical_pauli(m: int, i: int, letter: str) -> PauliOp:
    return PauliOp.single(m, i, letter)


def ancilla_stabilizers(spec: AncillaSpec) -> list[PauliOp]:
    """Block generators of both halves plus X_i (x) U X_i U^dagger and Z_i (x) U Z_i U^dagger."""
    gens = spec.block_generators((1, 2))
    for i in range(spec.m):
        for letter in "XZ":
            p = _logical_pauli(spec.m, i, letter)
            gens.append(spec.logical_on(1, p) * spec.logical_on(2, spec.u.conj(p)))
    return gens


def build_ancilla_state(spec: AncillaSpec, data_stabilizers: list[PauliOp] | None = None) -> Tableau:
    """Tableau over all 3 groups: the ancilla on groups 1 and 2, the data group in the
    logical state fixed by ``data_stabilizers`` (m-qubit logical Paulis; default all Z)."""
    if data_stabilizers is None:
        data_stabilizers = [_logical_pauli(spec.m, i, "Z") for i in range(spec.m)]
    if len(data_stabilizers) != spec.m:
        raise ValueError("need m logical stabilizers for the data")
    gens = spec.block_generators((0,)) + [spec.logical_on(0, s) for s in data_stabilizers] + ancilla_stabilizers(spec)
    return Tableau.from_stabilizers(gens)


# correction ------------------------------------------------------------------------


def pauli_correction(spec: AncillaSpec, a: list[int], b: list[int]) -> PauliOp:
    """Logical correction U X^b Z^a U^dagger for Bell outcomes a (XX parities) and b (ZZ parities)."""
    m = spec.m
    x = sum(int(b[i]) << i for i in range(m))
    z = sum(int(a[i]) << i for i in range(m))
    return spec.u.conj(PauliOp(m, x, z, (x & z).bit_count()))


CorrectionFn = Callable[[AncillaSpec, list, list], PauliOp]


def _bell_hook(spec: AncillaSpec, meas_d: list, meas_a: list, correction: CorrectionFn):
    """Decode both transversal measurements, then set per-wire X/Z flags on the output group."""
    code = spec.code
    dec = lookup_minweight_decoder(code)
    k = code.k
    out_wires = [q for blk in spec.group(2) for q in blk]

    def parity(bits: np.ndarray, mask: int) -> np.ndarray:
        idx = [q for q in range(code.n) if (mask >> q) & 1]
        return np.bitwise_xor.reduce(bits[idx], axis=0)

    def decode(bits: np.ndarray, basis: str) -> np.ndarray:
        """Lookup-correct one block's measured pattern (n, shots)."""
        rows = code.hx_rows if basis == "X" else code.hz_rows
        syn = np.zeros(bits.shape[1], dtype=np.int64)
        for i, r in enumerate(rows):
            syn |= parity(bits, r).astype(np.int64) << i
        corr = dec.z_table[syn] if basis == "X" else dec.x_table[syn]
        flips = ((corr[None, :] >> np.arange(code.n)[:, None]) & 1).astype(bool)
        return bits ^ flips

    def fn(ctx):
        shots = ctx.shots
        a = np.zeros((spec.m, shots), dtype=bool)
        b = np.zeros((spec.m, shots), dtype=bool)
        for blk in range(spec.blocks):
            d = decode(ctx.rec[meas_d[blk]], "X")
            s = decode(ctx.rec[meas_a[blk]], "Z")
            for j in range(k):
                a[blk * k + j] = parity(d, code.logical_x[j].x)
                b[blk * k + j] = parity(s, code.logical_z[j].z)
        ctx.flags["bell_a"] = a
        ctx.flags["bell_b"] = b
        fx = np.zeros((len(out_wires), shots), dtype=bool)
        fz = np.zeros((len(out_wires), shots), dtype=bool)
        cache: dict = {}
        keys = np.concatenate([a, b]).T
        for s in range(shots):
            key = keys[s].tobytes()
            if key not in cache:
                c = correction(spec, list(a[:, s]), list(b[:, s]))
                phys = spec.logical_on(2, c)
                cache[key] = (np.array([(phys.x >> q) & 1 for q in out_wires], dtype=bool),
                              np.array([(phys.z >> q) & 1 for q in out_wires], dtype=bool))
            fx[:, s], fz[:, s] = cache[key]
        for i, q in enumerate(out_wires):
            ctx.flags[f"tc.x{q}"] = fx[i]
            ctx.flags[f"tc.z{q}"] = fz[i]
    return fn


def build_teleport_circuit(spec: AncillaSpec, correction: CorrectionFn = pauli_correction) -> Circuit:
    """Bell measurement between group 0 and group 1, Pauli correction on group 2."""
    b = CircuitBuilder(inputs=range(spec.n_wires))
    d_blocks, a_blocks, out_blocks = spec.group(0), spec.group(1), spec.group(2)
    b.set_active(range(spec.n_wires), None, "tel.idle")
    for db, ab in zip(d_blocks, a_blocks):
        for qd, qa in zip(db, ab):
            b.op("CNOT", qd, qa, tag="bell")
    for db in d_blocks:
        for q in db:
            b.op("H", q, tag="bell")
    meas_d = [[b.op("measure_Z", q, tag="bell") for q in db] for db in d_blocks]
    meas_a = [[b.op("measure_Z", q, tag="bell") for q in ab] for ab in a_blocks]
    b.hook("bell", _bell_hook(spec, meas_d, meas_a, correction))
    for blk in out_blocks:
        for q in blk:
            b.op("classical_control", q, tag="correct", control=(f"tc.x{q}", f"tc.z{q}"))
    outs = [q for blk in out_blocks for q in blk]
    c = b.build(outputs=outs)
    c.meta.update(kind="teleport", spec=spec)
    return c


@dataclass
class TeleportResult:
    state: Tableau
    a: list
    b: list
    correction: PauliOp
    record: np.ndarray


def _force_branch(spec: AncillaSpec, state: Tableau, branch: tuple) -> None:
    """Project onto a chosen logical Bell outcome before the physical measurement."""
    a, b = branch
    for i in range(spec.m):
        xx = spec.logical_on(0, _logical_pauli(spec.m, i, "X")) * spec.logical_on(1, _logical_pauli(spec.m, i, "X"))
        zz = spec.logical_on(0, _logical_pauli(spec.m, i, "Z")) * spec.logical_on(1, _logical_pauli(spec.m, i, "Z"))
        state.measure_pauli(xx, forced=int(a[i]))
        state.measure_pauli(zz, forced=int(b[i]))


def teleport(state: Tableau, spec: AncillaSpec, rng: np.random.Generator, branch: tuple | None = None,
             circuit: Circuit | None = None, path: FaultPath | None = None) -> TeleportResult:
    """Run the teleportation on a 3-group state (see :func:`build_ancilla_state`)."""
    if state.n != spec.n_wires:
        raise ValueError(f"state has {state.n} qubits, layout needs {spec.n_wires}")
    circuit = build_teleport_circuit(spec) if circuit is None else circuit
    st = state.copy()
    if branch is not None:
        _force_branch(spec, st, branch)
    run = run_tableau(circuit, st, rng, path)
    a = [int(v) for v in run.ctx.flags["bell_a"][:, 0]]
    b = [int(v) for v in run.ctx.flags["bell_b"][:, 0]]
    if branch is not None and (a, b) != ([int(v) for v in branch[0]], [int(v) for v in branch[1]]):
        raise RuntimeError("decoded Bell outcome differs from the forced branch")
    return TeleportResult(run.tableau, a, b, pauli_correction(spec, a, b), run.ctx.rec[:, 0].copy())


def output_matches(spec: AncillaSpec, out: Tableau, data_stabilizers: list[PauliOp]) -> PauliOp | None:
    """None if the output group holds U|psi> in the code space; else the first violated stabilizer."""
    for g in spec.block_generators((2,)):
        if out.expectation(g) != 1:
            return g
    for s in data_stabilizers:
        want = spec.logical_on(2, spec.u.conj(s))
        if out.expectation(want) != 1:
            return spec.u.conj(s)
    return None


def stabilizer_basis_inputs(m: int) -> list[list[PauliOp]]:
    """Every product of single-qubit eigenstates of +-X, +-Y, +-Z."""
    singles = []
    for letter in "XYZ":
        for sign in (0, 2):
            singles.append((letter, sign))
    out = []
    for combo in np.ndindex(*(6,) * m):
        gens = []
        for i, c in enumerate(combo):
            letter, sign = singles[c]
            p = PauliOp.single(m, i, letter)
            gens.append(PauliOp(m, p.x, p.z, p.phase + sign))
        out.append(gens)
    return out


def random_stabilizer_input(m: int, rng: np.random.Generator) -> list[PauliOp]:
    v = CliffordTableau.random(m, rng)
    return [v.conj(PauliOp.single(m, i, "Z")) for i in range(m)]


def all_branches(m: int):
    for code in range(4**m):
        a = [(code >> i) & 1 for i in range(m)]
        b = [(code >> (m + i)) & 1 for i in range(m)]
        yield a, b


@dataclass
class VerifyReport:
    passed: bool
    runs: int
    witnesses: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"pass": self.passed, "runs": self.runs, "witnesses": self.witnesses}


def verify_logical_action(spec: AncillaSpec, trials: int, rng: np.random.Generator,
                          correction: CorrectionFn = pauli_correction, branches: str = "all",
                          max_witnesses: int = 5) -> VerifyReport:
    """Teleport basis and random stabilizer inputs through every Bell branch; compare with U applied ideally."""
    circuit = build_teleport_circuit(spec, correction)
    inputs = stabilizer_basis_inputs(spec.m) + [random_stabilizer_input(spec.m, rng) for _ in range(trials)]
    runs = 0
    witnesses = []
    for inp in inputs:
        base = build_ancilla_state(spec, inp)
        chosen = list(all_branches(spec.m)) if branches == "all" else [None]
        for br in chosen:
            res = teleport(base, spec, rng, br, circuit)
            runs += 1
            bad = output_matches(spec, res.state, inp)
            if bad is not None and len(witnesses) < max_witnesses:
                witnesses.append({"input": [str(s) for s in inp], "a": res.a, "b": res.b, "violated": str(bad)})
    return VerifyReport(not witnesses, runs, witnesses)


def bell_fault_weights(spec: AncillaSpec) -> dict:
    """Single Pauli faults at every Bell-measurement location, via Pauli frames.

    Reports the largest per-block weight of the frame (before the measured
    blocks are read out, and on the corrected output) and whether any fault
    leaves a logical error on the output.
    """
    from .frames import BatchFaults
    from .ftscheme import single_fault_paths

    circuit = build_teleport_circuit(spec)
    paths = single_fault_paths(circuit)
    res = run_frames(circuit, len(paths), faults=BatchFaults.from_paths(paths).compiled())
    worst = 0
    logical = 0
    for g in (0, 1, 2):
        for wires in spec.group(g):
            w = (res.x[wires] | res.z[wires]).sum(axis=0)
            worst = max(worst, int(w.max()))
            if g == 2:
                xbar, zbar = _ideal_classes_k(spec.code, res.x[wires], res.z[wires])
                logical += int((xbar | zbar).sum())
    return {"paths": len(paths), "max_block_weight": worst, "output_logical_errors": logical}


def _ideal_classes_k(code: CssCode, x: np.ndarray, z: np.ndarray):
    """Lookup-decode a block frame; (any X-bar flip, any Z-bar flip) per shot for k >= 1."""
    dec = lookup_minweight_decoder(code)
    n = code.n
    w = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
    xi = (x.astype(np.int64) * w[:, None]).sum(axis=0)
    zi = (z.astype(np.int64) * w[:, None]).sum(axis=0)

    def par(v, mask):
        return (np.bitwise_count((v & np.int64(mask)).astype(np.uint64)) & 1).astype(bool)

    sx = np.zeros_like(xi)
    for i, r in enumerate(code.hx_rows):
        sx |= par(zi, r).astype(np.int64) << i
    sz = np.zeros_like(xi)
    for i, r in enumerate(code.hz_rows):
        sz |= par(xi, r).astype(np.int64) << i
    rx = xi ^ dec.x_table[sz]
    rz = zi ^ dec.z_table[sx]
    xbar = np.zeros(len(xi), dtype=bool)
    zbar = np.zeros(len(xi), dtype=bool)
    for j in range(code.k):
        xbar |= par(rx, code.logical_z[j].z)
        zbar |= par(rz, code.logical_x[j].x)
    return xbar, zbar
