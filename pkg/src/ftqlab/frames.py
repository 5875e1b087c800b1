"""Executors for :mod:`ftqlab.circuits`: batched Pauli frames and a tableau run.

Pauli-frame simulation tracks, per shot, the Pauli by which the faulty run
differs from the ideal one. The record holds outcome flips relative to the
ideal run, so it is exact for classical logic that only reads quantities
that are deterministic in the ideal run (syndrome parities, verification
bits). All circuits built in this package satisfy that.

Fault convention: a fault acts on the output wires of its location, except
at measurements where it acts just before the measurement (so an X before a
Z measurement flips it).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import MEASUREMENTS, Circuit, Context
from .pauli import PauliOp
from .tableau import Tableau

LETTERS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


@dataclass(frozen=True)
class FaultPath:
    """Locations with a Pauli fault each; ``faults[loc]`` is a string over IXYZ, one letter per wire."""

    faults: tuple

    @classmethod
    def of(cls, mapping: dict) -> "FaultPath":
        return cls(tuple(sorted(mapping.items())))

    @classmethod
    def empty(cls) -> "FaultPath":
        return cls(())

    @property
    def locations(self) -> frozenset:
        return frozenset(loc for loc, _ in self.faults)

    def as_dict(self) -> dict:
        return dict(self.faults)

    def __len__(self) -> int:
        return len(self.faults)

    def check(self, circuit: Circuit) -> None:
        for loc, letters in self.faults:
            if not 0 <= loc < circuit.size:
                raise ValueError(f"location {loc} is not in the circuit")
            if len(letters) != len(circuit.locations[loc].qubits) or set(letters) - set("IXYZ"):
                raise ValueError(f"bad fault {letters!r} at location {loc}")


def location_paulis(k: int) -> list[str]:
    """All nontrivial Paulis on k wires, in lexicographic IXYZ order."""
    from itertools import product

    return ["".join(p) for p in product("IXYZ", repeat=k) if set(p) != {"I"}]


class BatchFaults:
    """Per-shot deterministic faults: loc -> (shot indices, x bits (m, k), z bits (m, k))."""

    def __init__(self):
        self.by_loc: dict[int, list] = {}

    def add(self, loc: int, shot: int, letters: str) -> None:
        self.by_loc.setdefault(loc, []).append((shot, letters))

    def compiled(self) -> dict:
        out = {}
        for loc, items in self.by_loc.items():
            shots = np.array([s for s, _ in items], dtype=np.int64)
            xs = np.array([[LETTERS[c][0] for c in l] for _, l in items], dtype=bool)
            zs = np.array([[LETTERS[c][1] for c in l] for _, l in items], dtype=bool)
            out[loc] = (shots, xs, zs)
        return out

    @classmethod
    def from_paths(cls, paths: list[FaultPath]) -> "BatchFaults":
        b = cls()
        for shot, p in enumerate(paths):
            for loc, letters in p.faults:
                b.add(loc, shot, letters)
        return b


@dataclass
class RandomNoise:
    """Each active location suffers a uniform nontrivial Pauli on its wires w.p. delta;
    measurements are flipped w.p. delta."""

    delta: float
    rng: np.random.Generator
    skip_tags: tuple = ()
    counts: np.ndarray | None = None  # faults per shot on active locations, if given

    def tally(self, f, act) -> None:
        if self.counts is None or f is None:
            return
        shots = f[0] if act is None else f[0][act[f[0]]]
        np.add.at(self.counts, shots, 1)

    def sample(self, loc, shots: int):
        if self.delta <= 0 or (self.skip_tags and loc.tag.startswith(self.skip_tags)):
            return None
        hit = self.rng.random(shots) < self.delta
        idx = np.nonzero(hit)[0]
        if not len(idx):
            return None
        k = len(loc.qubits)
        if loc.kind in MEASUREMENTS:
            x = np.ones((len(idx), 1), dtype=bool) if loc.kind == "measure_Z" else np.zeros((len(idx), 1), dtype=bool)
            z = ~x
            return idx, x, z
        code = self.rng.integers(1, 4**k, size=len(idx))
        x = np.zeros((len(idx), k), dtype=bool)
        z = np.zeros((len(idx), k), dtype=bool)
        for j in range(k):
            letter = (code >> (2 * j)) & 3
            x[:, j] = (letter == 1) | (letter == 2)
            z[:, j] = (letter == 2) | (letter == 3)
        return idx, x, z


@dataclass
class FrameResult:
    x: np.ndarray
    z: np.ndarray
    ctx: Context
    extra: dict = field(default_factory=dict)

    def block(self, qubits) -> tuple[np.ndarray, np.ndarray]:
        q = list(qubits)
        return self.x[q], self.z[q]


def run_frames(circuit: Circuit, shots: int, init_x=None, init_z=None, faults: dict | None = None,
               noise: RandomNoise | None = None) -> FrameResult:
    """Propagate Pauli frames for ``shots`` shots.

    ``init_x``/``init_z`` map wire -> boolean array of initial frame bits
    (input errors); ``faults`` is a compiled :class:`BatchFaults` dict.
    """
    n = circuit.n_qubits
    x = np.zeros((n, shots), dtype=bool)
    z = np.zeros((n, shots), dtype=bool)
    for src, dst in ((init_x, x), (init_z, z)):
        if src:
            for q, bits in src.items():
                dst[q] = bits
    ctx = Context(circuit.n_meas, shots)
    faults = faults or {}
    ones = np.ones(shots, dtype=bool)
    locs = circuit.locations
    for li, layer in enumerate(circuit.layers):
        for hook in circuit.hooks.get(li, ()):
            hook.fn(ctx)
        for idx in layer:
            loc = locs[idx]
            act = ctx.flags[loc.active] if loc.active is not None else None
            kind = loc.kind
            hit = faults.get(idx)
            rnd = None
            if noise is not None:
                rnd = noise.sample(loc, shots)
                noise.tally(rnd, act)
            if kind in MEASUREMENTS:
                for f in (hit, rnd):
                    if f is not None:
                        _inject(x, z, loc.qubits, f, act)
                q = loc.qubits[0]
                ctx.rec[loc.meas] = x[q] if kind == "measure_Z" else z[q]
                continue
            if kind != "idle":
                gate = act
                if loc.cond is not None:
                    c = ctx.flags[loc.cond]
                    gate = c if gate is None else gate & c
                _apply(kind, loc, x, z, gate, ctx, ones)
            for f in (hit, rnd):
                if f is not None:
                    _inject(x, z, loc.qubits, f, act)
    for hook in circuit.hooks.get(len(circuit.layers), ()):
        hook.fn(ctx)
    return FrameResult(x, z, ctx)


def _inject(x, z, qubits, f, act) -> None:
    shots, fx, fz = f
    if act is not None:
        keep = act[shots]
        shots, fx, fz = shots[keep], fx[keep], fz[keep]
    for j, q in enumerate(qubits):
        x[q, shots] ^= fx[:, j]
        z[q, shots] ^= fz[:, j]


def _apply(kind, loc, x, z, mask, ctx, ones) -> None:
    qs = loc.qubits
    if kind in ("prep_0", "prep_plus"):
        q = qs[0]
        if mask is None:
            x[q] = False
            z[q] = False
        else:
            x[q] &= ~mask
            z[q] &= ~mask
    elif kind in ("X", "Z"):
        return
    elif kind == "H":
        q = qs[0]
        if mask is None:
            x[q], z[q] = z[q].copy(), x[q].copy()
        else:
            d = (x[q] ^ z[q]) & mask
            x[q] ^= d
            z[q] ^= d
    elif kind == "S":
        q = qs[0]
        z[q] ^= x[q] if mask is None else x[q] & mask
    elif kind == "CNOT":
        c, t = qs
        if mask is None:
            x[t] ^= x[c]
            z[c] ^= z[t]
        else:
            x[t] ^= x[c] & mask
            z[c] ^= z[t] & mask
    elif kind == "CZ":
        a, b = qs
        if mask is None:
            z[b] ^= x[a]
            z[a] ^= x[b]
        else:
            z[b] ^= x[a] & mask
            z[a] ^= x[b] & mask
    elif kind == "classical_control":
        q = qs[0]
        fx, fz = loc.control
        ax = ctx.flags[fx] if fx else None
        az = ctx.flags[fz] if fz else None
        if mask is not None:
            ax = None if ax is None else ax & mask
            az = None if az is None else az & mask
        if ax is not None:
            x[q] ^= ax
        if az is not None:
            z[q] ^= az
    else:  # pragma: no cover - guarded by KINDS
        raise ValueError(kind)


# tableau execution -----------------------------------------------------------


@dataclass
class TableauRun:
    tableau: Tableau
    ctx: Context


def run_tableau(circuit: Circuit, state: Tableau, rng: np.random.Generator, path: FaultPath | None = None) -> TableauRun:
    """Execute the circuit on a full stabilizer state (one shot, actual outcomes).

    ``state`` covers all ``circuit.n_qubits`` wires; wires that are not inputs
    may hold anything since they are prepared before use.
    """
    if state.n != circuit.n_qubits:
        raise ValueError("state size differs from the circuit's wire count")
    t = state
    ctx = Context(circuit.n_meas, 1)
    faults = path.as_dict() if path is not None else {}
    n = t.n

    def fault(loc, letters):
        x = z = 0
        for q, c in zip(loc.qubits, letters):
            bx, bz = LETTERS[c]
            x |= bx << q
            z |= bz << q
        if x or z:
            t.apply_pauli(PauliOp(n, x, z))

    for li, layer in enumerate(circuit.layers):
        for hook in circuit.hooks.get(li, ()):
            hook.fn(ctx)
        for idx in layer:
            loc = circuit.locations[idx]
            if loc.active is not None and not ctx.flags[loc.active][0]:
                continue
            letters = faults.get(idx)
            kind, qs = loc.kind, loc.qubits
            if kind in MEASUREMENTS:
                if letters:
                    fault(loc, letters)
                q = qs[0]
                m = t.measure_z(q, rng) if kind == "measure_Z" else t.measure_x(q, rng)
                ctx.rec[loc.meas, 0] = bool(m)
                continue
            apply_gate = loc.cond is None or bool(ctx.flags[loc.cond][0])
            if apply_gate:
                if kind == "prep_0":
                    t.reset(qs[0], "Z", rng)
                elif kind == "prep_plus":
                    t.reset(qs[0], "X", rng)
                elif kind == "X":
                    t.x(qs[0])
                elif kind == "Z":
                    t.z(qs[0])
                elif kind == "H":
                    t.h(qs[0])
                elif kind == "S":
                    t.s(qs[0])
                elif kind == "CNOT":
                    t.cnot(*qs)
                elif kind == "CZ":
                    t.cz(*qs)
                elif kind == "classical_control":
                    fx, fz = loc.control
                    if fx and ctx.flags[fx][0]:
                        t.x(qs[0])
                    if fz and ctx.flags[fz][0]:
                        t.z(qs[0])
            if letters:
                fault(loc, letters)
    for hook in circuit.hooks.get(len(circuit.layers), ()):
        hook.fn(ctx)
    return TableauRun(t, ctx)
