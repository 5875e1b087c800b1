"""Toric-code communication experiments with minimum-weight perfect matching.

Lattice conventions follow :func:`ftqlab.codes.toric_code`: vertex (i, j)
carries the X check (star), plaquette (i, j) the Z check with top-left
corner (i, j). Z errors light up vertices, X errors light up plaquettes; both
defect sets live on an L x L torus with the taxicab metric.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import networkx as nx
import numpy as np

from . import kernels
from .codes import toric_code, toric_edge
from .pauli import CssCode, PauliOp, Syndrome, logical_class, syndrome
from .rng import stream
from .stats import wilson_interval

DP_MAX_DEFECTS = 16


class OutOfHypothesis(ValueError):
    pass


@dataclass
class ToricLattice:
    L: int
    code: CssCode = field(init=False)

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("L must be at least 2")
        self.code = toric_code(self.L)

    @property
    def n(self) -> int:
        return 2 * self.L * self.L

    def edge(self, kind: str, i: int, j: int) -> int:
        return toric_edge(self.L, kind, i, j)

    def coords(self, site: int) -> tuple[int, int]:
        return divmod(site, self.L)

    def distance(self, a: int, b: int) -> int:
        (i1, j1), (i2, j2) = self.coords(a), self.coords(b)
        di, dj = abs(i1 - i2), abs(j1 - j2)
        return min(di, self.L - di) + min(dj, self.L - dj)

    def _steps(self, a: int, b: int) -> tuple[int, int]:
        """Signed shortest displacement (rows, cols); ties go the positive way."""
        (i1, j1), (i2, j2) = self.coords(a), self.coords(b)

        def short(d):
            d %= self.L
            return d if d <= self.L - d else d - self.L

        return short(i2 - i1), short(j2 - j1)

    def primal_path(self, a: int, b: int) -> int:
        """Edges (bitmask) of a shortest vertex-to-vertex path: columns first, then rows."""
        di, dj = self._steps(a, b)
        i, j = self.coords(a)
        out = 0
        step = 1 if dj > 0 else -1
        for _ in range(abs(dj)):
            out ^= 1 << (self.edge("h", i, j) if step > 0 else self.edge("h", i, j - 1))
            j += step
        step = 1 if di > 0 else -1
        for _ in range(abs(di)):
            out ^= 1 << (self.edge("v", i, j) if step > 0 else self.edge("v", i - 1, j))
            i += step
        return out

    def dual_path(self, a: int, b: int) -> int:
        """Edges crossed by a shortest plaquette-to-plaquette path."""
        di, dj = self._steps(a, b)
        i, j = self.coords(a)
        out = 0
        step = 1 if dj > 0 else -1
        for _ in range(abs(dj)):
            out ^= 1 << (self.edge("v", i, j + 1) if step > 0 else self.edge("v", i, j))
            j += step
        step = 1 if di > 0 else -1
        for _ in range(abs(di)):
            out ^= 1 << (self.edge("h", i + 1, j) if step > 0 else self.edge("h", i, j))
            i += step
        return out


def match_defects(lat: ToricLattice, defects: list[int]) -> list[tuple[int, int]]:
    """Minimum-weight perfect matching of defect sites (pairs of indices into ``defects``)."""
    m = len(defects)
    if m % 2:
        raise ValueError(f"odd number of defects ({m}): syndrome is not a boundary")
    if m == 0:
        return []
    dist = np.array([[lat.distance(a, b) for b in defects] for a in defects], dtype=np.int64)
    if m <= DP_MAX_DEFECTS:
        return kernels.min_weight_matching(dist)
    g = nx.Graph()
    big = int(dist.max()) + 1
    for u in range(m):
        for v in range(u + 1, m):
            g.add_edge(u, v, weight=big - int(dist[u, v]))
    mate = nx.max_weight_matching(g, maxcardinality=True)
    return sorted(tuple(sorted(p)) for p in mate)


def decode_mwpm(lat: ToricLattice, s: Syndrome) -> PauliOp:
    L2 = lat.L * lat.L
    bits = s.bits
    if len(bits) != 2 * L2:
        raise ValueError("syndrome length does not match the lattice")
    vertex_defects = [v for v in range(L2) if bits[v]]
    plaquette_defects = [p for p in range(L2) if bits[L2 + p]]
    z = 0
    for a, b in match_defects(lat, vertex_defects):
        z ^= lat.primal_path(vertex_defects[a], vertex_defects[b])
    x = 0
    for a, b in match_defects(lat, plaquette_defects):
        x ^= lat.dual_path(plaquette_defects[a], plaquette_defects[b])
    return PauliOp(lat.n, x, z)


def matching_weight(lat: ToricLattice, defects: list[int]) -> int:
    return sum(lat.distance(defects[a], defects[b]) for a, b in match_defects(lat, defects))


def bound_zeta(L: int, alpha: float, strict: bool = True) -> float:
    """(16/3) L^4 (36 alpha)^(L/2); valid only for alpha <= 1/36."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if strict and alpha > 1 / 36:
        raise OutOfHypothesis(f"alpha={alpha} exceeds 1/36")
    return 16 / 3 * L**4 * (36 * alpha) ** (L / 2)


@dataclass(frozen=True)
class CommExperimentConfig:
    L: int
    nu: float
    delta_prime: float
    trials: int = 1000
    seed: int = 0
    sampler: str = "iid"
    spread: float = 0.0
    plant: PauliOp | None = None

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("L must be at least 2")
        for name in ("nu", "delta_prime"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.sampler not in ("iid", "cluster"):
            raise ValueError("sampler must be 'iid' or 'cluster'")

    @property
    def alpha_eff(self) -> float:
        return self.nu + 2 * self.delta_prime

    def in_bound_regime(self) -> bool:
        return self.alpha_eff <= 1 / 36


OUTCOMES = ("success", "logical_failure", "detected_only")


def _layers(n: int, rates, rng: np.random.Generator, sampler: str, spread: float, neighbors) -> tuple[int, int]:
    """Product of independent noise layers, one per rate, drawn in a single block."""
    k = len(rates)
    hit = rng.random((k, n)) < np.asarray(rates, dtype=float)[:, None]
    letters = rng.integers(1, 4, size=(k, n))
    if sampler == "cluster":
        coins = rng.random((k, n, 4)) < spread
        grown = hit.copy()
        for layer, q in zip(*np.nonzero(hit)):
            for slot, nb in enumerate(neighbors[q]):
                if coins[layer, q, slot]:
                    grown[layer, nb] = True
        hit = grown
    if not hit.any():
        return 0, 0
    letters = letters * hit
    xb = np.bitwise_xor.reduce((letters == 1) | (letters == 2), axis=0)
    zb = np.bitwise_xor.reduce((letters == 2) | (letters == 3), axis=0)
    x = sum(1 << int(q) for q in np.nonzero(xb)[0])
    z = sum(1 << int(q) for q in np.nonzero(zb)[0])
    return x, z


_LATTICES: dict[int, ToricLattice] = {}


def lattice(L: int) -> ToricLattice:
    if L not in _LATTICES:
        _LATTICES[L] = ToricLattice(L)
    return _LATTICES[L]


def edge_neighbors(lat: ToricLattice) -> list[list[int]]:
    """Edges sharing a vertex, used as lattice adjacency by the cluster sampler."""
    L = lat.L
    at_vertex = {}
    for i in range(L):
        for j in range(L):
            at_vertex[(i, j)] = [lat.edge("h", i, j), lat.edge("h", i, j - 1), lat.edge("v", i, j), lat.edge("v", i - 1, j)]
    nbrs: list[set] = [set() for _ in range(lat.n)]
    for edges in at_vertex.values():
        for a in edges:
            nbrs[a].update(b for b in edges if b != a)
    return [sorted(s)[:4] for s in nbrs]


@lru_cache(maxsize=None)
def _neighbors(L: int) -> tuple:
    return tuple(tuple(v) for v in edge_neighbors(lattice(L)))


def sample_comm_error(cfg: CommExperimentConfig, rng: np.random.Generator) -> PauliOp:
    """Encoder (delta'), channel (nu) and decoder (delta') noise multiplied together."""
    lat = lattice(cfg.L)
    nbrs = _neighbors(cfg.L) if cfg.sampler == "cluster" else None
    x, z = _layers(lat.n, (cfg.delta_prime, cfg.nu, cfg.delta_prime), rng, cfg.sampler, cfg.spread, nbrs)
    e = PauliOp(lat.n, x, z)
    if cfg.plant is not None:
        e = e * cfg.plant
    return e


def run_comm_trial(cfg: CommExperimentConfig, trial_index: int) -> str:
    """One communication round on stream (cfg.seed, trial_index)."""
    rng = stream(cfg.seed, trial_index)
    return classify_residual(cfg.L, sample_comm_error(cfg, rng))


def classify_residual(L: int, e: PauliOp) -> str:
    lat = lattice(L)
    s = syndrome(lat.code, e)
    if s.is_zero():
        residual = e
        if e.weight() == 0:
            return "success"
    else:
        residual = e * decode_mwpm(lat, s)
    cls = logical_class(lat.code, residual)
    if cls == "detectable":
        raise RuntimeError("matching left a nonzero syndrome")
    return "success" if set(cls) == {"I"} else "logical_failure"


@dataclass
class CommEstimate:
    L: int
    trials: int
    failures: int
    rate: float
    ci: tuple[float, float]
    first_stream: int = 0


def estimate_logical_failure(cfg: CommExperimentConfig, trials: int | None = None, threads: int = 1,
                             first_stream: int = 0) -> CommEstimate:
    trials = cfg.trials if trials is None else trials
    if trials < 100:
        raise ValueError("need at least 100 trials")

    def chunk(lo: int, hi: int) -> int:
        return sum(run_comm_trial(cfg, first_stream + i) != "success" for i in range(lo, hi))

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        bounds = np.linspace(0, trials, threads + 1).astype(int)
        with ThreadPoolExecutor(threads) as ex:
            failures = sum(ex.map(chunk, bounds[:-1], bounds[1:]))
    else:
        failures = chunk(0, trials)
    return CommEstimate(cfg.L, trials, failures, failures / trials, wilson_interval(failures, trials), first_stream)


def monotone_within_ci(estimates: list[CommEstimate]) -> bool:
    """Rates nonincreasing in L up to overlapping confidence intervals."""
    ordered = sorted(estimates, key=lambda e: e.L)
    return all(b.ci[0] <= a.ci[1] for a, b in zip(ordered, ordered[1:]))


def logical_loop(lat: ToricLattice, which: str) -> PauliOp:
    """A non-contractible loop: 'Z1', 'Z2', 'X1' or 'X2' (the stored logical representatives)."""
    idx = int(which[1]) - 1
    return (lat.code.logical_z if which[0] == "Z" else lat.code.logical_x)[idx]


def exhaustive_correction(L: int, wmax: int) -> tuple[int, list[PauliOp]]:
    """Decode every Pauli of weight <= wmax; returns (count, failures)."""
    from .pauli import weight_at_most

    lat = lattice(L)
    failures = []
    count = 0
    for e in weight_at_most(lat.n, wmax):
        count += 1
        if classify_residual(L, e) != "success":
            failures.append(e)
    return count, failures
