"""Single-shot error correction with a constant-depth syndrome extraction circuit.

One ancilla per generator: layer 1 prepares all ancillas, the entangling
layers couple each ancilla to its support in an order found by a small
constraint search, the last layer measures. Each round measures every
generator once, decodes that single noisy syndrome and applies the
correction; there is no repetition.

Ordering constraint: an X check and a Z check that share qubits must cross
an even number of times (X before Z on an even number of shared qubits),
otherwise the circuit does not measure the commuting generators.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuits import Circuit, CircuitBuilder
from .decoders import LookupDecoder, lookup_minweight_decoder
from .frames import RandomNoise, run_frames
from .pauli import CssCode
from .rng import stream
from .stats import wilson_interval

__all__ = [
    "SyndromeCircuit", "Unschedulable", "build_syndrome_extraction", "Frame", "RoundStats", "run_ec_round",
    "memory_experiment", "SurvivalCurve", "lookup_minweight_decoder", "reduced_weight_table", "batch_reduced_weight",
]

REDUCED_TABLE_MAX_N = 20


class Unschedulable(ValueError):
    pass


def _bits(v: int) -> list[int]:
    return [q for q in range(v.bit_length()) if (v >> q) & 1]


def _schedule(code: CssCode, slots: int, node_limit: int = 2_000_000) -> dict | None:
    """Slot per (generator, qubit) edge: distinct per generator and per qubit, even crossings."""
    gens = [("X", r) for r in code.hx_rows] + [("Z", r) for r in code.hz_rows]
    # visit generators so that overlapping pairs close early: greedy by overlap with those placed
    placed: list[int] = []
    seen = 0
    rest = list(range(len(gens)))
    while rest:
        g = max(rest, key=lambda i: (bin(gens[i][1] & seen).count("1"), -i))
        rest.remove(g)
        placed.append(g)
        seen |= gens[g][1]
    edges = [(g, q) for g in placed for q in _bits(gens[g][1])]
    pairs = []
    for a, (ka, ra) in enumerate(gens):
        for b, (kb, rb) in enumerate(gens):
            if ka == "X" and kb == "Z" and ra & rb:
                pairs.append((a, b, _bits(ra & rb)))
    # the last edge to be assigned closes each pair check
    order = {e: i for i, e in enumerate(edges)}
    closing: dict[int, list] = {}
    for a, b, shared in pairs:
        last = max(max(order[(a, q)], order[(b, q)]) for q in shared)
        closing.setdefault(last, []).append((a, b, shared))
    slot: dict = {}
    gen_used = [set() for _ in gens]
    qubit_used = [set() for _ in range(code.n)]
    nodes = 0

    def ok_pairs(i: int) -> bool:
        for a, b, shared in closing.get(i, ()):
            if sum(slot[(a, q)] < slot[(b, q)] for q in shared) % 2:
                return False
        return True

    def search(i: int) -> bool:
        nonlocal nodes
        if i == len(edges):
            return True
        nodes += 1
        if nodes > node_limit:
            return False
        g, q = edges[i]
        for s in range(slots):
            if s in gen_used[g] or s in qubit_used[q]:
                continue
            slot[(g, q)] = s
            gen_used[g].add(s)
            qubit_used[q].add(s)
            if ok_pairs(i) and search(i + 1):
                return True
            gen_used[g].discard(s)
            qubit_used[q].discard(s)
            del slot[(g, q)]
        return False

    return dict(slot) if search(0) else None


@dataclass
class SyndromeCircuit:
    code: CssCode
    circuit: Circuit
    ancilla: tuple  # generator index -> wire
    meas: tuple  # generator index -> measurement index
    schedule: dict  # (generator, qubit) -> entangling slot

    @property
    def depth(self) -> int:
        return self.circuit.depth


def build_syndrome_extraction(code: CssCode, max_extra_slots: int = 2) -> SyndromeCircuit:
    n = code.n
    degree = max(
        max(bin(r).count("1") for r in code.hx_rows + code.hz_rows),
        max(sum((r >> q) & 1 for r in code.hx_rows + code.hz_rows) for q in range(n)),
    )
    sched = None
    for slots in range(degree, degree + max_extra_slots + 1):
        sched = _schedule(code, slots)
        if sched is not None:
            break
    if sched is None:
        raise Unschedulable(f"no CNOT order within {degree + max_extra_slots} entangling layers")
    mx = len(code.hx_rows)
    gens = list(code.hx_rows) + list(code.hz_rows)
    b = CircuitBuilder(inputs=range(n))
    anc = b.alloc(len(gens))
    b.set_active(range(n), None, "data.idle")
    for g, a in enumerate(anc):
        b.op("prep_plus" if g < mx else "prep_0", a, tag="init")
    b.barrier()
    for s in range(slots):
        for (g, q), t in sorted(sched.items()):
            if t != s:
                continue
            if g < mx:
                b.op("CNOT", anc[g], q, tag="entangle")
            else:
                b.op("CNOT", q, anc[g], tag="entangle")
        b.barrier()
    meas = [b.op("measure_X" if g < mx else "measure_Z", a, tag="measure") for g, a in enumerate(anc)]
    c = b.build(outputs=range(n))
    if c.depth != slots + 2:
        raise Unschedulable("layering merged or split the schedule")
    return SyndromeCircuit(code, c, tuple(anc), tuple(meas), sched)


# reduced weights -------------------------------------------------------------------------


def _sector_table(basis: list[int], n: int) -> np.ndarray:
    elems = np.zeros(1, dtype=np.int64)
    for b in basis:
        elems = np.concatenate([elems, elems ^ np.int64(b)])
    table = np.empty(1 << n, dtype=np.int8)
    chunk = max(1, (1 << 22) // len(elems))
    for lo in range(0, 1 << n, chunk):
        v = np.arange(lo, min(1 << n, lo + chunk), dtype=np.int64)
        w = np.bitwise_count((v[:, None] ^ elems[None, :]).astype(np.uint64))
        table[lo:lo + len(v)] = w.min(axis=1)
    return table


@lru_cache(maxsize=8)
def _tables(code_id: int, code: CssCode) -> tuple[np.ndarray, np.ndarray]:
    return _sector_table(code.stabilizer_basis("X"), code.n), _sector_table(code.stabilizer_basis("Z"), code.n)


def reduced_weight_table(code: CssCode) -> tuple[np.ndarray, np.ndarray]:
    """Minimum weight over the stabilizer coset, for every X part and every Z part."""
    if code.n > REDUCED_TABLE_MAX_N:
        raise ValueError(f"reduced-weight tables cover n <= {REDUCED_TABLE_MAX_N}")
    return _tables(id(code), code)


def _pack(bits: np.ndarray) -> np.ndarray:
    w = np.left_shift(np.int64(1), np.arange(bits.shape[0], dtype=np.int64))
    return (bits.astype(np.int64) * w[:, None]).sum(axis=0)


def batch_reduced_weight(code: CssCode, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    tx, tz = reduced_weight_table(code)
    return np.maximum(tx[_pack(x)], tz[_pack(z)]).astype(np.int64)


def _syndrome_of(code: CssCode, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    hx = code.h_x.astype(np.int64)
    hz = code.h_z.astype(np.int64)
    return np.concatenate([(hx @ z.astype(np.int64)) % 2, (hz @ x.astype(np.int64)) % 2]).astype(bool)


def _logical_ok(code: CssCode, dec: LookupDecoder, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Ideal decoding of the data frame leaves a trivial logical class."""
    s = _syndrome_of(code, x, z)
    mx = len(code.hx_rows)
    rx = _pack(x) ^ dec.x_table[_pack(s[mx:])]
    rz = _pack(z) ^ dec.z_table[_pack(s[:mx])]
    ok = np.ones(x.shape[1], dtype=bool)
    for lx, lz in zip(code.logical_x, code.logical_z):
        ok &= (np.bitwise_count((rx & np.int64(lz.z)).astype(np.uint64)) & 1) == 0
        ok &= (np.bitwise_count((rz & np.int64(lx.x)).astype(np.uint64)) & 1) == 0
    return ok


# rounds ------------------------------------------------------------------------------------


@dataclass
class Frame:
    """Data-qubit Pauli frames, one column per trial."""

    x: np.ndarray
    z: np.ndarray

    @classmethod
    def clean(cls, n: int, shots: int) -> "Frame":
        return cls(np.zeros((n, shots), dtype=bool), np.zeros((n, shots), dtype=bool))

    @classmethod
    def planted(cls, p, shots: int) -> "Frame":
        x = ((p.x >> np.arange(p.n)) & 1).astype(bool)
        z = ((p.z >> np.arange(p.n)) & 1).astype(bool)
        return cls(np.repeat(x[:, None], shots, axis=1), np.repeat(z[:, None], shots, axis=1))

    @property
    def shots(self) -> int:
        return self.x.shape[1]


@dataclass
class RoundStats:
    round: int
    reduced_before: np.ndarray
    reduced_after: np.ndarray
    syndrome_error_weight: np.ndarray
    correction_weight: np.ndarray
    survived: np.ndarray
    measured: np.ndarray


def run_ec_round(frame: Frame, delta: float, decoder: LookupDecoder, rng: np.random.Generator,
                 sc: SyndromeCircuit | None = None, syndrome_flips: np.ndarray | None = None,
                 round_index: int = 1) -> tuple[Frame, RoundStats]:
    """One extraction round with circuit noise, one decode, one correction.

    The syndrome error is the measured syndrome XOR the syndrome of the data
    frame entering the round.
    """
    code = decoder.code
    sc = build_syndrome_extraction(code) if sc is None else sc
    n, shots = code.n, frame.shots
    before = batch_reduced_weight(code, frame.x, frame.z)
    true_syn = _syndrome_of(code, frame.x, frame.z)
    init_x = {q: frame.x[q] for q in range(n)}
    init_z = {q: frame.z[q] for q in range(n)}
    res = run_frames(sc.circuit, shots, init_x, init_z, noise=RandomNoise(delta, rng) if delta > 0 else None)
    measured = res.ctx.rec[list(sc.meas)].copy()
    if syndrome_flips is not None:
        flips = np.asarray(syndrome_flips, dtype=bool)
        measured ^= flips[:, None] if flips.ndim == 1 else flips
    mx = len(code.hx_rows)
    cx, cz = decoder.decode_ints(_pack(measured[:mx]), _pack(measured[mx:]))
    bx = ((cx[None, :] >> np.arange(n)[:, None]) & 1).astype(bool)
    bz = ((cz[None, :] >> np.arange(n)[:, None]) & 1).astype(bool)
    out = Frame(res.x[:n] ^ bx, res.z[:n] ^ bz)
    stats = RoundStats(
        round_index, before, batch_reduced_weight(code, out.x, out.z),
        (measured ^ true_syn).sum(axis=0), (bx | bz).sum(axis=0), _logical_ok(code, decoder, out.x, out.z), measured,
    )
    return out, stats


@dataclass
class SurvivalCurve:
    delta: float
    trials: int
    survival: np.ndarray  # per round, fraction with trivial logical class after ideal decoding
    ci: list
    mean_reduced_weight: np.ndarray
    ever_heavy: float  # fraction whose reduced weight reached floor(d/2) + 1 at some round end
    heavy_threshold: int

    def rows(self):
        for r in range(len(self.survival)):
            yield r + 1, float(self.survival[r]), self.ci[r][0], self.ci[r][1], float(self.mean_reduced_weight[r])


def memory_experiment(code: CssCode, delta: float, rounds: int, trials: int, seed: int,
                      decoder: LookupDecoder | None = None, chunk: int = 5000, distance: int | None = None) -> SurvivalCurve:
    """Repeated single-shot rounds from a clean start; chunk c of trials draws from stream (seed, c)."""
    if rounds < 1 or trials < 1:
        raise ValueError("rounds and trials must be positive")
    decoder = lookup_minweight_decoder(code) if decoder is None else decoder
    sc = build_syndrome_extraction(code)
    if distance is None:
        from .codes import distance as code_distance

        distance = code_distance(code) or code.n
    heavy = distance // 2 + 1
    alive = np.zeros(rounds, dtype=np.int64)
    wsum = np.zeros(rounds, dtype=np.float64)
    heavy_count = 0
    for c, lo in enumerate(range(0, trials, chunk)):
        m = min(chunk, trials - lo)
        rng = stream(seed, c)
        f = Frame.clean(code.n, m)
        ever = np.zeros(m, dtype=bool)
        for r in range(rounds):
            f, st = run_ec_round(f, delta, decoder, rng, sc, round_index=r + 1)
            alive[r] += int(st.survived.sum())
            wsum[r] += float(st.reduced_after.sum())
            ever |= st.reduced_after >= heavy
        heavy_count += int(ever.sum())
    surv = alive / trials
    return SurvivalCurve(delta, trials, surv, [wilson_interval(int(a), trials) for a in alive], wsum / trials,
                         heavy_count / trials, heavy)
