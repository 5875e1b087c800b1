"""Shor error correction, rectangles (Recs), code interfaces and fault-path checks.

EC gadget. Each generator is measured with a cat-state ancilla: one ancilla
per support qubit, prepared by a fan-out from its first qubit and, for
weight >= 4, verified with one extra qubit before it touches the data.
X checks use a Z-basis cat coupled by CNOT ancilla -> data and read out in
the X basis; Z checks use the even-parity X-basis cat coupled by CNOT
data -> ancilla and read out in the Z basis. All X couplings precede all Z
couplings on every data qubit, so overlapping checks see a consistent order.

A round's string is the syndrome bits followed by the verification bits.
Rounds repeat until t + 1 consecutive strings agree, up to (t + 1)^2 rounds;
on exhaustion the last string is used and the shot is flagged. Rounds after
termination are inactive. The agreed syndrome is decoded by the minimum-weight
lookup table and applied through classical_control locations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .circuits import Circuit, CircuitBuilder
from .codes import distance
from .decoders import lookup_minweight_decoder
from .frames import BatchFaults, FaultPath, location_paulis, run_frames, run_tableau
from .pauli import CssCode, PauliOp
from .tableau import Tableau

REC_GATES = ("I", "X", "Z", "CNOT", "prep_0", "prep_plus", "measure_Z", "measure_X")
TRANSVERSAL_KIND = {"X": "X", "Z": "Z", "prep_0": "prep_0", "prep_plus": "prep_plus",
                    "measure_Z": "measure_Z", "measure_X": "measure_X"}
MAX_CAT_WEIGHT = 8


class UnsupportedGate(ValueError):
    pass


def _bits(v: int) -> list[int]:
    out, q = [], 0
    while v:
        if v & 1:
            out.append(q)
        v >>= 1
        q += 1
    return out


def _pack_rows(a: np.ndarray) -> np.ndarray:
    """Boolean (m, shots) -> int64 per shot with row i in bit i."""
    if a.shape[0] == 0:
        return np.zeros(a.shape[1], dtype=np.int64)
    w = np.left_shift(np.int64(1), np.arange(a.shape[0], dtype=np.int64))
    return (a.astype(np.int64) * w[:, None]).sum(axis=0)


def _parity(v: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(v.astype(np.uint64)) & 1).astype(bool)


def default_t(code: CssCode) -> int:
    d = distance(code, 7)
    if d is None:
        raise ValueError("code distance above 7; pass t explicitly")
    return (d - 1) // 2


# Shor EC ------------------------------------------------------------------------


@dataclass
class ECGadget:
    code: CssCode
    data: list
    prefix: str
    t: int
    cap: int
    gens: list = field(default_factory=list)  # (type, support wires, cat wires, verify wire or None)
    cat_meas: dict = field(default_factory=dict)  # (round, gen) -> list of meas indices
    verify_meas: dict = field(default_factory=dict)  # (round, gen) -> meas index

    @property
    def verified(self) -> list[int]:
        return [j for j, g in enumerate(self.gens) if g[3] is not None]

    def active_flag(self, k: int) -> str | None:
        return None if k <= self.t + 1 else f"{self.prefix}act{k}"

    @property
    def ancillas(self) -> list[int]:
        out = []
        for _, _, cat, v in self.gens:
            out += cat + ([v] if v is not None else [])
        return out


def _new_gadget(b: CircuitBuilder, code: CssCode, data: list, prefix: str, t: int) -> ECGadget:
    if len(data) != code.n:
        raise ValueError("data wire count differs from the code length")
    if code.max_generator_weight() > MAX_CAT_WEIGHT:
        raise ValueError(f"generator weight {code.max_generator_weight()} exceeds the cat budget {MAX_CAT_WEIGHT}")
    g = ECGadget(code, list(data), prefix, t, (t + 1) ** 2)
    for kind, rows in (("X", code.hx_rows), ("Z", code.hz_rows)):
        for r in rows:
            support = [data[q] for q in _bits(r)]
            cat = b.alloc(len(support))
            v = b.alloc(1)[0] if len(support) >= 4 else None
            g.gens.append((kind, support, cat, v))
    return g


def _cat_ops(b: CircuitBuilder, g: ECGadget, k: int) -> None:
    act = g.active_flag(k)
    tag = f"{g.prefix}r{k}.cat"
    for j, (kind, support, cat, v) in enumerate(g.gens):
        if kind == "X":
            b.op("prep_plus", cat[0], tag=tag, active=act)
            for a in cat[1:]:
                b.op("prep_0", a, tag=tag, active=act)
            for a in cat[1:]:
                b.op("CNOT", cat[0], a, tag=tag, active=act)
            if v is not None:
                b.op("prep_0", v, tag=tag, active=act)
                b.op("CNOT", cat[0], v, tag=tag, active=act)
                b.op("CNOT", cat[1], v, tag=tag, active=act)
                g.verify_meas[(k, j)] = b.op("measure_Z", v, tag=tag, active=act)
        else:
            b.op("prep_0", cat[0], tag=tag, active=act)
            for a in cat[1:]:
                b.op("prep_plus", a, tag=tag, active=act)
            for a in cat[1:]:
                b.op("CNOT", a, cat[0], tag=tag, active=act)
            if v is not None:
                b.op("prep_plus", v, tag=tag, active=act)
                b.op("CNOT", v, cat[0], tag=tag, active=act)
                b.op("CNOT", v, cat[1], tag=tag, active=act)
                g.verify_meas[(k, j)] = b.op("measure_X", v, tag=tag, active=act)


def _couple_ops(b: CircuitBuilder, g: ECGadget, k: int) -> None:
    act = g.active_flag(k)
    tag = f"{g.prefix}r{k}.couple"
    for kind_pass in ("X", "Z"):
        for j, (kind, support, cat, v) in enumerate(g.gens):
            if kind != kind_pass:
                continue
            cond = f"{g.prefix}r{k}ok{j}" if v is not None else None
            for a, q in zip(cat, support):
                if kind == "X":
                    b.op("CNOT", a, q, tag=tag, active=act, cond=cond)
                else:
                    b.op("CNOT", q, a, tag=tag, active=act, cond=cond)
    for j, (kind, support, cat, v) in enumerate(g.gens):
        meas = [b.op("measure_X" if kind == "X" else "measure_Z", a, tag=f"{g.prefix}r{k}.meas", active=act) for a in cat]
        g.cat_meas[(k, j)] = meas


def _verify_hook(g: ECGadget, k: int):
    def fn(ctx):
        for j in g.verified:
            ctx.flags[f"{g.prefix}r{k}ok{j}"] = ~ctx.rec[g.verify_meas[(k, j)]]
    return fn


def _round_hook(g: ECGadget, k: int):
    m = len(g.gens)
    ver = g.verified

    def fn(ctx):
        shots = ctx.shots
        s = np.zeros((m, shots), dtype=bool)
        for j in range(m):
            bits = np.bitwise_xor.reduce(ctx.rec[g.cat_meas[(k, j)]], axis=0)
            if g.gens[j][3] is not None:
                bits = bits & ctx.flags[f"{g.prefix}r{k}ok{j}"]
            s[j] = bits
        v = ctx.rec[[g.verify_meas[(k, j)] for j in ver]] if ver else np.zeros((0, shots), dtype=bool)
        st = ctx.scratch.setdefault(g.prefix, {})
        if k == 1:
            st["strings"] = []
            st["done"] = np.zeros(shots, dtype=bool)
            st["agreed"] = np.zeros((m, shots), dtype=bool)
            st["rounds"] = np.zeros(shots, dtype=np.int64)
        st["strings"].append(np.concatenate([s, v]))
        done = st["done"]
        if k >= g.t + 1:
            window = st["strings"][-(g.t + 1):]
            agree = np.ones(shots, dtype=bool)
            for a in window[1:]:
                agree &= np.all(a == window[0], axis=0)
            newly = agree & ~done
            st["agreed"][:, newly] = s[:, newly]
            st["rounds"][newly] = k
            done |= newly
        if k < g.cap:
            ctx.flags[f"{g.prefix}act{k + 1}"] = ~done
        else:
            rest = ~done
            st["agreed"][:, rest] = s[:, rest]
            st["rounds"][rest] = g.cap
            ctx.flags[f"{g.prefix}capped"] = rest
        st["strings"] = st["strings"][-(g.t + 1):]
    return fn


def _correction_hook(g: ECGadget):
    dec = lookup_minweight_decoder(g.code)
    mx = len(g.code.hx_rows)

    def fn(ctx):
        agreed = ctx.scratch[g.prefix]["agreed"]
        sx = _pack_rows(agreed[:mx])
        sz = _pack_rows(agreed[mx:])
        cx, cz = dec.decode_ints(sx, sz)
        for i in range(g.code.n):
            ctx.flags[f"{g.prefix}cx{i}"] = ((cx >> i) & 1).astype(bool)
            ctx.flags[f"{g.prefix}cz{i}"] = ((cz >> i) & 1).astype(bool)
        ctx.scratch[g.prefix]["syndrome_rounds"] = ctx.scratch[g.prefix]["rounds"].copy()
    return fn


def add_shor_ec(b: CircuitBuilder, blocks: list, t: int) -> list[ECGadget]:
    """Append Shor EC on each (code, data wires, prefix) block, rounds running in parallel."""
    gadgets = [_new_gadget(b, code, data, prefix, t) for code, data, prefix in blocks]
    cap = (t + 1) ** 2
    for k in range(1, cap + 1):
        for g in gadgets:
            b.set_active(g.data + g.ancillas, g.active_flag(k), f"{g.prefix}r{k}.idle")
            _cat_ops(b, g, k)
        for g in gadgets:
            b.hook(f"{g.prefix}r{k}.verify", _verify_hook(g, k))
        for g in gadgets:
            _couple_ops(b, g, k)
        for g in gadgets:
            b.hook(f"{g.prefix}r{k}.round", _round_hook(g, k))
    for g in gadgets:
        b.hook(f"{g.prefix}decode", _correction_hook(g))
    # all blocks correct in one shared layer
    for g in gadgets:
        b.set_active(g.data, None, f"{g.prefix}corr.idle")
        for i, q in enumerate(g.data):
            b.op("classical_control", q, tag=f"{g.prefix}corr", control=(f"{g.prefix}cx{i}", f"{g.prefix}cz{i}"))
    b.barrier()
    return gadgets


def build_shor_ec(code: CssCode, t: int | None = None) -> Circuit:
    t = default_t(code) if t is None else t
    b = CircuitBuilder(inputs=range(code.n))
    b.set_active(range(code.n), None, "ec0.")
    gadgets = add_shor_ec(b, [(code, list(range(code.n)), "ec0.")], t)
    b.meta.update(kind="shor_ec", code=code, t=t, cap=(t + 1) ** 2, gadgets=gadgets, blocks={"A": list(range(code.n))})
    return b.build(outputs=range(code.n))


def ec_rounds_used(ctx, prefix: str = "ec0.") -> np.ndarray:
    return ctx.scratch[prefix]["rounds"]


# Recs --------------------------------------------------------------------------------


def _logical_meas_hook(code: CssCode, meas: list, basis: str, flag: str):
    """Classical decoding of a transversal measurement into one logical bit."""
    dec = lookup_minweight_decoder(code)
    rows = code.hz_rows if basis == "Z" else code.hx_rows
    logical = (code.logical_z if basis == "Z" else code.logical_x)[0]
    lmask = np.int64(logical.z if basis == "Z" else logical.x)
    rmask = [np.int64(r) for r in rows]

    def fn(ctx):
        m = _pack_rows(ctx.rec[meas])
        syn = np.zeros_like(m)
        for i, r in enumerate(rmask):
            syn |= _parity(m & r).astype(np.int64) << i
        if basis == "Z":
            corr = dec.x_table[syn]
        else:
            corr = dec.z_table[syn]
        ctx.flags[flag] = _parity((m ^ corr) & lmask)
    return fn


def build_rec(gate: str, code: CssCode, r: int = 1, t: int | None = None):
    """1-Rec: EC on every input block followed by the transversal gate.

    Level 2 returns a :class:`RecTree` in which every location of the 1-Rec
    stands for the 1-Rec of its own gate.
    """
    if gate not in REC_GATES:
        raise UnsupportedGate(f"gate {gate!r} has no transversal Rec; supported: {', '.join(REC_GATES)}")
    if r == 2:
        return RecTree.build(gate, code, t)
    if r != 1:
        raise ValueError("levels 1 and 2 are supported")
    t = default_t(code) if t is None else t
    n = code.n
    two = gate == "CNOT"
    prep = gate in ("prep_0", "prep_plus")
    blocks = {"A": list(range(n))}
    if two:
        blocks["B"] = list(range(n, 2 * n))
    inputs = [] if prep else [q for wires in blocks.values() for q in wires]
    b = CircuitBuilder(inputs=inputs)
    b.reserve([q for w in blocks.values() for q in w])
    gadgets = []
    if not prep:
        for name, wires in blocks.items():
            b.set_active(wires, None, f"ec{name}.")
        gadgets = add_shor_ec(b, [(code, wires, f"ec{name}.") for name, wires in blocks.items()], t)
    for wires in blocks.values():
        b.set_active(wires, None, "gate.idle")
    logical_flag = None
    if gate == "CNOT":
        for qa, qb in zip(blocks["A"], blocks["B"]):
            b.op("CNOT", qa, qb, tag="gate")
    elif gate in TRANSVERSAL_KIND:
        meas = [b.op(TRANSVERSAL_KIND[gate], q, tag="gate") for q in blocks["A"]]
        if gate.startswith("measure"):
            logical_flag = "logical"
            b.hook("logical", _logical_meas_hook(code, meas, gate[-1], logical_flag))
    b.barrier()
    outputs = [] if gate.startswith("measure") else [q for w in blocks.values() for q in w]
    c = b.build(outputs=outputs)
    c.meta.update(kind="rec", gate=gate, level=1, code=code, t=t, cap=(t + 1) ** 2, blocks=blocks,
                  gadgets=gadgets, logical_flag=logical_flag)
    return c


CHILD_GATE = {
    "idle": "I", "prep_0": "prep_0", "prep_plus": "prep_plus", "measure_Z": "measure_Z",
    "measure_X": "measure_X", "X": "X", "Z": "Z", "CNOT": "CNOT", "classical_control": "X",
}


@dataclass
class RecTree:
    """Level-2 Rec kept in factored form: parent 1-Rec plus one 1-Rec per gate kind."""

    gate: str
    code: CssCode
    top: Circuit
    children: dict
    level: int = 2

    @classmethod
    def build(cls, gate: str, code: CssCode, t: int | None = None) -> "RecTree":
        top = build_rec(gate, code, 1, t)
        kinds = {loc.kind for loc in top.locations}
        bad = kinds - set(CHILD_GATE)
        if bad:
            raise UnsupportedGate(f"no 1-Rec for location kinds {sorted(bad)}")
        children = {CHILD_GATE[k]: build_rec(CHILD_GATE[k], code, 1, t) for k in sorted(kinds)}
        return cls(gate, code, top, children)

    def child(self, parent_loc: int) -> Circuit:
        return self.children[CHILD_GATE[self.top.locations[parent_loc].kind]]

    @property
    def n_subrecs(self) -> int:
        return self.top.size

    @property
    def size(self) -> int:
        sizes = {g: c.size for g, c in self.children.items()}
        return sum(sizes[CHILD_GATE[loc.kind]] for loc in self.top.locations)


# fault paths ---------------------------------------------------------------------------


def classify_fault_path(rec, path, r: int | None = None) -> str:
    """'good' or 'bad' for a 1-Rec (path = FaultPath) or a RecTree (path = {(parent, child): letters})."""
    if isinstance(rec, RecTree):
        r = 2 if r is None else r
        if r != 2:
            raise ValueError("a RecTree is a level-2 Rec")
        per_sub: dict[int, int] = {}
        items = path.items() if isinstance(path, dict) else path
        for (i, j), _ in items:
            if not 0 <= i < rec.top.size or not 0 <= j < rec.child(i).size:
                raise ValueError(f"location {(i, j)} is not in the Rec")
            per_sub[i] = per_sub.get(i, 0) + 1
        bad_subs = sum(1 for c in per_sub.values() if c > 1)
        return "good" if bad_subs <= 1 else "bad"
    r = 1 if r is None else r
    if r != 1:
        raise ValueError("a flat circuit is a level-1 Rec")
    path.check(rec)
    return "good" if len(path) <= 1 else "bad"


def simulate_with_faults(circuit: Circuit, path: FaultPath, state: Tableau, rng: np.random.Generator):
    """Full stabilizer simulation with the fault path injected; returns (state, context)."""
    path.check(circuit)
    run = run_tableau(circuit, state, rng, path)
    return run.tableau, run.ctx


def input_errors(n: int, weight1: bool = True) -> list[tuple[np.ndarray, np.ndarray]]:
    """Identity plus every weight-1 Pauli, as (x bits, z bits) boolean vectors of length n."""
    out = [(np.zeros(n, dtype=bool), np.zeros(n, dtype=bool))]
    if weight1:
        for q in range(n):
            for bx, bz in ((1, 0), (1, 1), (0, 1)):
                x = np.zeros(n, dtype=bool)
                z = np.zeros(n, dtype=bool)
                x[q], z[q] = bx, bz
                out.append((x, z))
    return out


def rec_inputs(rec: Circuit, weight1: bool = True) -> list[dict]:
    """Input error assignments: per block weight <= 1, one block at a time.

    For two-block Recs, errors on both blocks at once are not enumerated:
    the blocks pass through independent EC gadgets, and a fault-free gadget
    maps every weight-1 input to a stabilizer (checked by
    :func:`noiseless_ec_exact`), which the transversal gate keeps in the
    stabilizer group. The single-block enumeration therefore decides the
    product cases too.
    """
    blocks = rec.meta["blocks"]
    if rec.meta["gate"] in ("prep_0", "prep_plus"):
        return [{}]
    n = rec.meta["code"].n
    errs = input_errors(n, weight1)
    out = [{}]
    for name, wires in blocks.items():
        for x, z in errs[1:]:
            out.append({name: (x, z)})
    return out


def _ideal_classes(code: CssCode, x: np.ndarray, z: np.ndarray):
    """Ideal decoding of a block frame: (X-bar flip, Z-bar flip, residual reduced weight) per shot."""
    dec = lookup_minweight_decoder(code)
    xi = _pack_rows(x)
    zi = _pack_rows(z)
    sx = np.zeros_like(xi)
    for i, r in enumerate(code.hx_rows):
        sx |= _parity(zi & np.int64(r)).astype(np.int64) << i
    sz = np.zeros_like(xi)
    for i, r in enumerate(code.hz_rows):
        sz |= _parity(xi & np.int64(r)).astype(np.int64) << i
    rx = xi ^ dec.x_table[sz]
    rz = zi ^ dec.z_table[sx]
    xbar = _parity(rx & np.int64(code.logical_z[0].z))
    zbar = _parity(rz & np.int64(code.logical_x[0].x))
    wt = np.maximum(dec.x_weight[sz], dec.z_weight[sx])
    return xbar, zbar, wt


def evaluate_rec(rec: Circuit, paths: list[FaultPath], inputs: list[dict], noise=None):
    """Run every (path, input) pair; returns correct (len(paths), len(inputs)) and extras."""
    code = rec.meta["code"]
    gate = rec.meta["gate"]
    blocks = rec.meta["blocks"]
    shots = len(paths) * len(inputs)
    bf = BatchFaults()
    for pi, p in enumerate(paths):
        for loc, letters in p.faults:
            for ii in range(len(inputs)):
                bf.add(loc, pi * len(inputs) + ii, letters)
    init_x, init_z = {}, {}
    for name, wires in blocks.items():
        bx = np.zeros((code.n, shots), dtype=bool)
        bz = np.zeros((code.n, shots), dtype=bool)
        for ii, inp in enumerate(inputs):
            if name in inp:
                x, z = inp[name]
                cols = np.arange(ii, shots, len(inputs))
                bx[:, cols] = x[:, None]
                bz[:, cols] = z[:, None]
        for j, q in enumerate(wires):
            init_x[q], init_z[q] = bx[j], bz[j]
    res = run_frames(rec, shots, init_x, init_z, bf.compiled(), noise=noise)
    ok = np.ones(shots, dtype=bool)
    out_weight = np.zeros(shots, dtype=np.int64)
    if gate.startswith("measure"):
        ok &= ~res.ctx.flags[rec.meta["logical_flag"]]
    else:
        for wires in blocks.values():
            xbar, zbar, wt = _ideal_classes(code, res.x[wires], res.z[wires])
            if gate == "prep_0":
                ok &= ~xbar
            elif gate == "prep_plus":
                ok &= ~zbar
            else:
                ok &= ~xbar & ~zbar
            out_weight = np.maximum(out_weight, wt)
    rounds = np.zeros(shots, dtype=np.int64)
    capped = np.zeros(shots, dtype=bool)
    for g in rec.meta["gadgets"]:
        rounds = np.maximum(rounds, res.ctx.scratch[g.prefix]["rounds"])
        capped |= res.ctx.flags[f"{g.prefix}capped"]
    shape = (len(paths), len(inputs))
    return ok.reshape(shape), {"rounds": rounds.reshape(shape), "capped": capped.reshape(shape),
                               "out_weight": out_weight.reshape(shape), "ctx": res.ctx}


def check_correctness(rec: Circuit, path: FaultPath, code: CssCode | None = None, weight1_inputs: bool = True) -> bool:
    """True iff the Rec with this fault path implements its gate on every logical input
    and every weight-<=1 input error, after ideal decoding."""
    if code is not None and code is not rec.meta["code"] and code.n != rec.meta["code"].n:
        raise ValueError("code differs from the Rec's code")
    path.check(rec)
    ok, _ = evaluate_rec(rec, [path], rec_inputs(rec, weight1_inputs))
    return bool(ok.all())


def noiseless_ec_exact(code: CssCode, t: int | None = None) -> bool:
    """A fault-free EC gadget maps every weight-<=1 input error to a stabilizer."""
    rec = build_rec("I", code, 1, t)
    inputs = rec_inputs(rec)
    ok, extra = evaluate_rec(rec, [FaultPath.empty()], inputs)
    return bool(ok.all()) and bool((extra["out_weight"] == 0).all())


def noiseless_activity(circuit: Circuit, ctx) -> np.ndarray:
    """Per location: active in every shot of a fault-free run."""
    out = np.ones(circuit.size, dtype=bool)
    for loc in circuit.locations:
        if loc.active is not None:
            out[loc.index] = bool(ctx.flags[loc.active].all())
    return out


@dataclass
class SweepReport:
    gate: str
    total_paths: int
    good: int
    bad: int
    correct_given_good: int
    vacuous: int
    max_rounds: int
    capped: int
    max_output_weight: int
    witnesses: list = field(default_factory=list)

    @property
    def pass_rate(self) -> float:
        return self.correct_given_good / self.good if self.good else 1.0

    def as_dict(self) -> dict:
        return {
            "gate": self.gate, "total_paths": self.total_paths, "good": self.good, "bad": self.bad,
            "correct_given_good": self.correct_given_good, "vacuous": self.vacuous,
            "max_rounds": self.max_rounds, "capped": self.capped, "max_output_weight": self.max_output_weight,
            "witnesses": self.witnesses,
        }


def single_fault_paths(circuit: Circuit, locations=None, letters: str = "all") -> list[FaultPath]:
    """Every single-location fault; ``letters='single'`` restricts two-qubit locations to one faulty wire."""
    out = []
    for loc in circuit.locations if locations is None else locations:
        k = len(loc.qubits)
        options = location_paulis(k)
        if letters == "single" and k > 1:
            options = [p for p in options if sum(c != "I" for c in p) == 1]
        out += [FaultPath(((loc.index, p),)) for p in options]
    return out


def sweep_single_faults(rec: Circuit, letters: str = "all", weight1_inputs: bool = True,
                        chunk_shots: int = 40_000, max_witnesses: int = 10) -> SweepReport:
    """Exhaustive single-fault sweep of a 1-Rec.

    Faults on locations that are inactive in the fault-free run (EC rounds
    after termination) cannot change anything: with one fault the earlier
    rounds are clean, so the round stays inactive. Those paths are counted
    with the fault-free outcome instead of being simulated.
    """
    inputs = rec_inputs(rec, weight1_inputs)
    base_ok, base = evaluate_rec(rec, [FaultPath.empty()], inputs)
    live = noiseless_activity(rec, base["ctx"])
    paths = single_fault_paths(rec, letters=letters)
    active_paths = [p for p in paths if live[p.faults[0][0]]]
    vacuous = len(paths) - len(active_paths)
    per = max(1, chunk_shots // len(inputs))
    correct = vacuous if base_ok.all() else 0
    max_rounds = int(base["rounds"].max())
    capped = int(base["capped"].sum())
    max_w = int(base["out_weight"].max())
    witnesses = []
    for start in range(0, len(active_paths), per):
        batch = active_paths[start:start + per]
        ok, extra = evaluate_rec(rec, batch, inputs)
        good_rows = ok.all(axis=1)
        correct += int(good_rows.sum())
        max_rounds = max(max_rounds, int(extra["rounds"].max()))
        capped += int(extra["capped"].sum())
        max_w = max(max_w, int(extra["out_weight"][ok].max()) if ok.any() else 0)
        for i in np.nonzero(~good_rows)[0][: max(0, max_witnesses - len(witnesses))]:
            loc, letters_ = batch[i].faults[0]
            bad_input = int(np.nonzero(~ok[i])[0][0])
            witnesses.append({"location": int(loc), "tag": rec.locations[loc].tag, "kind": rec.locations[loc].kind,
                              "fault": letters_, "input": _describe_input(inputs[bad_input])})
    return SweepReport(rec.meta["gate"], len(paths), len(paths), 0, correct, vacuous, max_rounds, capped, max_w, witnesses)


def _describe_input(inp: dict) -> str:
    if not inp:
        return "none"
    (name, (x, z)), = inp.items()
    q = int(np.nonzero(x | z)[0][0])
    letter = "IXZY"[int(x[q]) | (int(z[q]) << 1)]
    return f"{name}:{letter}{q}"


def find_bad_witness(rec: Circuit, letters: str = "XZ", chunk: int = 400) -> tuple | None:
    """Search two-fault paths on the data before the first EC round, together with every
    allowed input error, for one that the Rec does not implement correctly.

    Returns (path, input description) or None.
    """
    first = sorted(rec.meta["gadgets"][0].data) if rec.meta["gadgets"] else []
    layer0 = [rec.locations[i] for i in rec.layers[0]] if rec.layers else []
    locs = [loc for loc in layer0 if loc.kind == "idle" and loc.qubits[0] in first]
    cands = []
    for i, a in enumerate(locs):
        for b_ in locs[i + 1:]:
            for la, lb in product(letters, repeat=2):
                cands.append(FaultPath.of({a.index: la, b_.index: lb}))
    inputs = rec_inputs(rec)
    for start in range(0, len(cands), chunk):
        batch = cands[start:start + chunk]
        ok, _ = evaluate_rec(rec, batch, inputs)
        bad = np.nonzero(~ok.all(axis=1))[0]
        if len(bad):
            i = int(bad[0])
            return batch[i], _describe_input(inputs[int(np.nonzero(~ok[i])[0][0])])
    return None


def monte_carlo_rec(rec: Circuit, delta: float, trials: int, seed: int, chunk: int = 20_000) -> SweepReport:
    """Random Pauli faults at rate delta per active location; shot i of chunk c uses stream (seed, c)."""
    from .frames import RandomNoise
    from .rng import stream

    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    good = correct_good = 0
    max_rounds = capped = max_w = 0
    for c, start in enumerate(range(0, trials, chunk)):
        m = min(chunk, trials - start)
        noise = RandomNoise(delta, stream(seed, c), counts=np.zeros(m, dtype=np.int64))
        ok, extra = evaluate_rec(rec, [FaultPath.empty()] * m, [{}], noise=noise)
        g = noise.counts <= 1
        good += int(g.sum())
        correct_good += int(ok[g, 0].sum())
        max_rounds = max(max_rounds, int(extra["rounds"].max()))
        capped += int(extra["capped"].sum())
        if (ok[:, 0] & g).any():
            max_w = max(max_w, int(extra["out_weight"][g & ok[:, 0], 0].max()))
    return SweepReport(rec.meta["gate"], trials, good, trials - good, correct_good, 0, max_rounds, capped, max_w)


def rectree_good_probability(tree: RecTree, delta: float) -> float:
    """P(a level-2 Rec is good) under independent faults at rate delta per location."""
    p_bad = []
    for loc in tree.top.locations:
        size = tree.child(loc.index).size
        p_bad.append(1 - (1 - delta) ** size - size * delta * (1 - delta) ** (size - 1))
    p_bad = np.clip(np.array(p_bad), 0.0, 1.0)
    # P(at most one sub-Rec bad)
    none = float(np.exp(np.sum(np.log1p(-p_bad)))) if (p_bad < 1).all() else 0.0
    one = none * float(np.sum(p_bad / (1 - p_bad))) if none > 0 else 0.0
    return none + one


# interfaces ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Encoder:
    """CNOT encoding circuit for a k = 1 CSS code from the reduced row echelon form of H_x."""

    code: CssCode
    q0: int
    pivots: tuple
    cnots: tuple

    @property
    def others(self) -> tuple:
        return tuple(q for q in range(self.code.n) if q != self.q0 and q not in self.pivots)

    def propagate(self, x: int, z: int, inverse: bool = False) -> tuple[int, int]:
        """Push a Pauli (bit masks) forward through the encoder (or its inverse)."""
        seq = reversed(self.cnots) if inverse else self.cnots
        for c, t in seq:
            if (x >> c) & 1:
                x ^= 1 << t
            if (z >> t) & 1:
                z ^= 1 << c
        return x, z


def build_encoder(code: CssCode) -> Encoder:
    if code.k != 1:
        raise ValueError("the interface encoder handles one logical qubit")
    n = code.n
    rows = list(code.hx_rows)
    pivots = []
    r = 0
    for col in range(n):
        hit = [i for i in range(r, len(rows)) if (rows[i] >> col) & 1]
        if not hit:
            continue
        rows[r], rows[hit[0]] = rows[hit[0]], rows[r]
        for i in range(len(rows)):
            if i != r and (rows[i] >> col) & 1:
                rows[i] ^= rows[r]
        pivots.append(col)
        r += 1
    rows = rows[:r]
    lx = code.logical_x[0].x
    for row, p in zip(rows, pivots):
        if (lx >> p) & 1:
            lx ^= row
    q0 = _bits(lx)[0]
    cnots = [(q0, j) for j in _bits(lx) if j != q0]
    for row, p in zip(rows, pivots):
        cnots += [(p, j) for j in _bits(row) if j != p]
    return Encoder(code, q0, tuple(pivots), tuple(cnots))


def _add_encode(b: CircuitBuilder, enc: Encoder, wires: list, tag: str = "enc") -> None:
    b.set_active(wires, None, f"{tag}.idle")
    for p in enc.pivots:
        b.op("prep_plus", wires[p], tag=tag)
    for q in enc.others:
        b.op("prep_0", wires[q], tag=tag)
    for c, t in enc.cnots:
        b.op("CNOT", wires[c], wires[t], tag=tag)
    b.barrier()


def _decode_hook(enc: Encoder, meas_of: dict, flag: str):
    code = enc.code
    dec = lookup_minweight_decoder(code)
    n = code.n
    # syndrome bit i from the pattern: generators pushed through the inverse encoder
    gens = []
    for g in code.generators():
        gx, gz = enc.propagate(g.x, g.z, inverse=True)
        if (gx >> enc.q0) & 1 or (gz >> enc.q0) & 1:
            raise RuntimeError("generator touches the logical wire after decoding")
        idx = []
        for q in range(n):
            if q == enc.q0:
                continue
            if q in enc.pivots:
                if (gz >> q) & 1:
                    raise RuntimeError("unexpected Z on a pivot")
                if (gx >> q) & 1:
                    idx.append(meas_of[q])
            else:
                if (gx >> q) & 1:
                    raise RuntimeError("unexpected X on a non-pivot")
                if (gz >> q) & 1:
                    idx.append(meas_of[q])
        gens.append(idx)
    mx = len(code.hx_rows)
    # q0 component of each single-qubit correction after the inverse encoder
    comp = np.zeros((2, 2, n), dtype=bool)  # [X or Z correction][x or z on q0][qubit]
    for j in range(n):
        for a, (x, z) in enumerate(((1 << j, 0), (0, 1 << j))):
            px, pz = enc.propagate(x, z, inverse=True)
            comp[a, 0, j] = (px >> enc.q0) & 1
            comp[a, 1, j] = (pz >> enc.q0) & 1

    def fn(ctx):
        s = np.array([np.bitwise_xor.reduce(ctx.rec[idx], axis=0) if idx else np.zeros(ctx.shots, dtype=bool)
                      for idx in gens])
        sx = _pack_rows(s[:mx])
        sz = _pack_rows(s[mx:])
        cx, cz = dec.decode_ints(sx, sz)
        bx = ((cx[None, :] >> np.arange(n)[:, None]) & 1).astype(bool)
        bz = ((cz[None, :] >> np.arange(n)[:, None]) & 1).astype(bool)
        out_x = (np.logical_and(bx, comp[0, 0][:, None]).sum(0) + np.logical_and(bz, comp[1, 0][:, None]).sum(0)) % 2
        out_z = (np.logical_and(bx, comp[0, 1][:, None]).sum(0) + np.logical_and(bz, comp[1, 1][:, None]).sum(0)) % 2
        ctx.flags[flag + "x"] = out_x.astype(bool)
        ctx.flags[flag + "z"] = out_z.astype(bool)
    return fn


def _add_decode(b: CircuitBuilder, enc: Encoder, wires: list, tag: str = "dec") -> None:
    b.set_active(wires, None, f"{tag}.idle")
    for c, t in reversed(enc.cnots):
        b.op("CNOT", wires[c], wires[t], tag=tag)
    meas_of = {}
    for p in enc.pivots:
        meas_of[p] = b.op("measure_X", wires[p], tag=tag)
    for q in enc.others:
        meas_of[q] = b.op("measure_Z", wires[q], tag=tag)
    b.hook(f"{tag}.lookup", _decode_hook(enc, meas_of, f"{tag}.c"))
    b.op("classical_control", wires[enc.q0], tag=tag, control=(f"{tag}.cx", f"{tag}.cz"))
    b.barrier()


def build_interface_up(code: CssCode, t: int | None = None) -> Circuit:
    """Gamma_{0,1}: encode the qubit on wire q0, then Shor EC."""
    t = default_t(code) if t is None else t
    enc = build_encoder(code)
    wires = list(range(code.n))
    b = CircuitBuilder(inputs=(enc.q0,))
    b.reserve(wires)
    _add_encode(b, enc, wires)
    g = add_shor_ec(b, [(code, wires, "ec.")], t)
    c = b.build(outputs=wires)
    c.meta.update(kind="interface_up", code=code, t=t, encoder=enc, gadgets=g, blocks={"A": wires})
    return c


def build_interface_down(code: CssCode, t: int | None = None) -> Circuit:
    """Gamma_{1,0}: Shor EC, inverse encoder, syndrome wires measured, Pauli fix on wire q0."""
    t = default_t(code) if t is None else t
    enc = build_encoder(code)
    wires = list(range(code.n))
    b = CircuitBuilder(inputs=wires)
    b.set_active(wires, None, "ec.")
    g = add_shor_ec(b, [(code, wires, "ec.")], t)
    _add_decode(b, enc, wires)
    c = b.build(outputs=(enc.q0,))
    c.meta.update(kind="interface_down", code=code, t=t, encoder=enc, gadgets=g, blocks={"A": wires})
    return c


def build_round_trip(code: CssCode, t: int | None = None) -> Circuit:
    """Gamma_{1,0} o Gamma_{0,1} on one wire."""
    t = default_t(code) if t is None else t
    enc = build_encoder(code)
    wires = list(range(code.n))
    b = CircuitBuilder(inputs=(enc.q0,))
    b.reserve(wires)
    _add_encode(b, enc, wires)
    g1 = add_shor_ec(b, [(code, wires, "up.ec.")], t)
    g2 = add_shor_ec(b, [(code, wires, "down.ec.")], t)
    _add_decode(b, enc, wires)
    c = b.build(outputs=(enc.q0,))
    c.meta.update(kind="round_trip", code=code, t=t, encoder=enc, gadgets=g1 + g2, blocks={"A": wires})
    return c


def level0(loc) -> bool:
    """Locations acting on bare (unencoded) information: the encoder and the decoder."""
    return loc.tag.startswith(("enc", "dec"))


@dataclass
class InterfaceReport:
    noiseless_identity: bool
    total_paths: int
    failing_paths: int
    failing_level0: int
    failing_encoded: int
    vacuous: int
    witnesses: list = field(default_factory=list)
    failing_by_tag: dict = field(default_factory=dict)

    @property
    def encoded_faults_pass(self) -> bool:
        return self.failing_encoded == 0

    @property
    def all_pass(self) -> bool:
        return self.noiseless_identity and self.failing_paths == 0


def noiseless_round_trip(circuit: Circuit, rng: np.random.Generator) -> dict:
    """Tableau runs on |0>, |1>, |+>, |->: returns {label: output expectation of the input's stabilizer}."""
    enc = circuit.meta["encoder"]
    n = circuit.n_qubits
    out = {}
    for label, letter, sign in (("0", "Z", 0), ("1", "Z", 2), ("+", "X", 0), ("-", "X", 2)):
        gens = []
        for q in range(n):
            if q == enc.q0:
                p = PauliOp.single(n, q, letter)
                gens.append(PauliOp(n, p.x, p.z, sign))
            else:
                gens.append(PauliOp.single(n, q, "Z"))
        st = Tableau.from_stabilizers(gens)
        run = run_tableau(circuit, st, rng)
        p = PauliOp.single(n, enc.q0, letter)
        out[label] = run.tableau.expectation(PauliOp(n, p.x, p.z, sign))
    return out


def sweep_interface_faults(circuit: Circuit, chunk: int = 50_000, max_witnesses: int = 10) -> InterfaceReport:
    """Every single Pauli fault at every location; the output wire's frame must be trivial."""
    if circuit.meta.get("kind") != "round_trip":
        raise ValueError("expects the circuit from build_round_trip")
    enc = circuit.meta["encoder"]
    base = run_frames(circuit, 1)
    live = noiseless_activity(circuit, base.ctx)
    paths = single_fault_paths(circuit)
    act = [p for p in paths if live[p.faults[0][0]]]
    vac = len(paths) - len(act)
    fail_l0 = fail_enc = 0
    witnesses = []
    by_tag: dict = {}
    for start in range(0, len(act), chunk):
        batch = act[start:start + chunk]
        res = run_frames(circuit, len(batch), faults=BatchFaults.from_paths(batch).compiled())
        bad = res.x[enc.q0] | res.z[enc.q0]
        for i in np.nonzero(bad)[0]:
            loc, letters = batch[i].faults[0]
            l0 = level0(circuit.locations[loc])
            fail_l0 += l0
            fail_enc += not l0
            tag = circuit.locations[loc].tag
            by_tag[tag] = by_tag.get(tag, 0) + 1
            if len(witnesses) < max_witnesses:
                witnesses.append({"location": int(loc), "tag": circuit.locations[loc].tag,
                                      "kind": circuit.locations[loc].kind, "fault": letters})
    noiseless = all(v == 1 for v in noiseless_round_trip(circuit, np.random.default_rng(0)).values())
    return InterfaceReport(noiseless, len(paths), fail_l0 + fail_enc, fail_l0, fail_enc, vac, witnesses, by_tag)
