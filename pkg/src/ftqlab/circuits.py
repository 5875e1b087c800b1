"""Layered circuit IR with classical hooks.

A circuit is a sequence of layers; each layer is a set of locations whose
qubit sets tile the wires live in that layer (waiting wires carry explicit
``idle`` locations). Classical processing happens in hooks that run between
layers. Hooks read the measurement record and write named boolean flags,
one value per shot, and flags gate locations in two ways:

* ``active``: the location exists in this run. Faults on inactive locations
  have no effect, which is how adaptively skipped EC rounds are modelled.
* ``cond``: the gate is applied only where the flag is set (e.g. a cat state
  that failed verification is not coupled to the data).

``classical_control`` locations apply X^a Z^b on one wire, where a and b
come from two flags.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

KINDS = (
    "prep_0", "prep_plus", "X", "Z", "H", "S", "CNOT", "CZ",
    "measure_Z", "measure_X", "idle", "classical_control",
)
ONE_QUBIT = {"prep_0", "prep_plus", "X", "Z", "H", "S", "measure_Z", "measure_X", "idle", "classical_control"}
TWO_QUBIT = {"CNOT", "CZ"}
MEASUREMENTS = {"measure_Z", "measure_X"}
PREPARATIONS = {"prep_0", "prep_plus"}


@dataclass(frozen=True)
class Location:
    index: int
    layer: int
    kind: str
    qubits: tuple
    tag: str = ""
    meas: int = -1
    active: str | None = None
    cond: str | None = None
    control: tuple = ()


class Context:
    """Classical state shared by hooks: measurement record and flags."""

    def __init__(self, n_meas: int, shots: int):
        self.shots = shots
        self.rec = np.zeros((n_meas, shots), dtype=bool)
        self.flags: dict[str, np.ndarray] = {}
        self.scratch: dict = {}

    def flag(self, name: str | None) -> np.ndarray | None:
        return None if name is None else self.flags[name]


@dataclass
class Hook:
    name: str
    fn: Callable[[Context], None]


@dataclass
class Circuit:
    n_qubits: int
    locations: list
    layers: list
    hooks: dict
    n_meas: int
    inputs: tuple
    outputs: tuple
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.locations)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def count(self, kind: str | None = None, tag_prefix: str | None = None) -> int:
        return sum(
            1 for loc in self.locations
            if (kind is None or loc.kind == kind) and (tag_prefix is None or loc.tag.startswith(tag_prefix))
        )

    def validate(self) -> None:
        """Every layer's locations use disjoint wires; live wires are covered."""
        live = set(self.inputs)
        for li, layer in enumerate(self.layers):
            used = set()
            for idx in layer:
                loc = self.locations[idx]
                if loc.layer != li:
                    raise ValueError(f"location {idx} filed under the wrong layer")
                for q in loc.qubits:
                    if q in used:
                        raise ValueError(f"wire {q} used twice in layer {li}")
                    used.add(q)
                    if loc.kind in PREPARATIONS:
                        live.add(q)
                    elif q not in live:
                        raise ValueError(f"wire {q} used before preparation in layer {li}")
            missing = live - used
            if missing:
                raise ValueError(f"layer {li} leaves wires {sorted(missing)} without a location")
            for idx in layer:
                loc = self.locations[idx]
                if loc.kind in MEASUREMENTS:
                    live.discard(loc.qubits[0])


@dataclass
class _Op:
    kind: str
    qubits: tuple
    tag: str
    meas: int
    active: str | None
    cond: str | None
    control: tuple


class CircuitBuilder:
    """Appends operations in program order and layers them ASAP between barriers."""

    def __init__(self, inputs=()):
        self.n_qubits = 0
        self.inputs = tuple(inputs)
        if self.inputs:
            self.n_qubits = max(self.inputs) + 1
        self.pending: list[_Op] = []
        self.layers: list[list[_Op]] = []
        self.layer_active: list[dict] = []
        self.hooks: dict[int, list[Hook]] = {}
        self.n_meas = 0
        self.wire_active: dict[int, tuple] = {}
        self.meta: dict = {}

    def alloc(self, k: int) -> list[int]:
        out = list(range(self.n_qubits, self.n_qubits + k))
        self.n_qubits += k
        return out

    def reserve(self, qubits) -> None:
        if qubits:
            self.n_qubits = max(self.n_qubits, max(qubits) + 1)

    def op(self, kind: str, *qubits: int, tag: str = "", active: str | None = None, cond: str | None = None,
           control: tuple = ()) -> int:
        if kind not in KINDS:
            raise ValueError(f"unknown gate kind {kind!r}")
        want = 2 if kind in TWO_QUBIT else 1
        if len(qubits) != want:
            raise ValueError(f"{kind} takes {want} qubit(s)")
        if len(set(qubits)) != len(qubits):
            raise ValueError("repeated qubit in one location")
        self.reserve(qubits)
        meas = -1
        if kind in MEASUREMENTS:
            meas = self.n_meas
            self.n_meas += 1
        self.pending.append(_Op(kind, tuple(qubits), tag, meas, active, cond, tuple(control)))
        return meas

    def set_active(self, qubits, flag: str | None, tag: str = "") -> None:
        """Flag and tag given to idles on these wires in layers created from now on."""
        for q in qubits:
            self.wire_active[q] = (flag, tag)

    def barrier(self) -> None:
        start = len(self.layers)
        free: dict[int, int] = {}
        placed: list[list[_Op]] = []
        for o in self.pending:
            at = max([free.get(q, start) for q in o.qubits])
            while len(placed) <= at - start:
                placed.append([])
            placed[at - start].append(o)
            for q in o.qubits:
                free[q] = at + 1
        for layer in placed:
            self.layers.append(layer)
            self.layer_active.append(dict(self.wire_active))
        self.pending = []

    def hook(self, name: str, fn: Callable[[Context], None]) -> None:
        """Run ``fn`` once all operations issued so far have executed."""
        self.barrier()
        self.hooks.setdefault(len(self.layers), []).append(Hook(name, fn))

    def build(self, outputs=None) -> Circuit:
        self.barrier()
        locations: list[Location] = []
        layers: list[tuple] = []
        live = set(self.inputs)
        for li, layer in enumerate(self.layers):
            idxs = []
            used = set()
            for o in layer:
                loc = Location(len(locations), li, o.kind, o.qubits, o.tag, o.meas, o.active, o.cond, o.control)
                locations.append(loc)
                idxs.append(loc.index)
                used.update(o.qubits)
                if o.kind in PREPARATIONS:
                    live.update(o.qubits)
            for q in sorted(live - used):
                flag, tag = self.layer_active[li].get(q, (None, ""))
                loc = Location(len(locations), li, "idle", (q,), tag, -1, flag)
                locations.append(loc)
                idxs.append(loc.index)
            for o in layer:
                if o.kind in MEASUREMENTS:
                    live.discard(o.qubits[0])
            layers.append(tuple(idxs))
        outs = tuple(sorted(live)) if outputs is None else tuple(outputs)
        if set(outs) != live:
            raise ValueError(f"declared outputs {sorted(outs)} differ from live wires {sorted(live)}")
        c = Circuit(self.n_qubits, locations, layers, dict(self.hooks), self.n_meas, self.inputs, outs, dict(self.meta))
        c.validate()
        return c
