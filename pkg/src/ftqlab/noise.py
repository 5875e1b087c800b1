"""Noise samplers and analytic bounds.

Supports are the sets A of qubits hit by a sampled error; a sampler is local
stochastic with parameter delta when P(T subset of A) <= delta**|T| for every
qubit set T. The i.i.d. sampler meets this with equality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .pauli import PauliOp
from .stats import wilson_interval

KINDS = ("iid_pauli", "local_stochastic_cluster", "gate_stochastic")
MIN_AUDIT_SAMPLES = 10_000


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    delta: float
    spread: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not 0 <= self.delta < 1 and not (self.kind == "iid_pauli" and self.delta == 1):
            raise ValueError("delta must lie in [0, 1)")
        if not 0 <= self.spread < 1:
            raise ValueError("spread must lie in [0, 1)")

    @property
    def id(self) -> str:
        if self.kind == "local_stochastic_cluster":
            return f"{self.kind}(delta={self.delta!r},spread={self.spread!r})"
        return f"{self.kind}(delta={self.delta!r})"


@dataclass(frozen=True)
class ErrorSample:
    support: frozenset
    pauli: PauliOp
    provenance: str = ""

    def __post_init__(self):
        if self.pauli.support != self.support:
            raise ValueError("Pauli support and recorded support differ")


# batch samplers ---------------------------------------------------------------
# Paulis are returned as boolean (shots, n) arrays; letter codes 1, 2, 3 = X, Y, Z.


def _letters_to_bits(letters: np.ndarray):
    return (letters == 1) | (letters == 2), (letters == 2) | (letters == 3)


def iid_batch(n: int, delta: float, shots: int, rng: np.random.Generator):
    """(support, x, z) boolean arrays of shape (shots, n)."""
    support = rng.random((shots, n)) < delta
    letters = rng.integers(1, 4, size=(shots, n)) * support
    x, z = _letters_to_bits(letters)
    return support, x, z


def ring_neighbors(n: int) -> list[tuple[int, ...]]:
    if n == 1:
        return [()]
    if n == 2:
        return [(1,), (0,)]
    return [((i - 1) % n, (i + 1) % n) for i in range(n)]


def cluster_batch(n: int, delta: float, spread: float, shots: int, rng: np.random.Generator, neighbors=None):
    """Seeds at rate delta; each seed recruits each neighbour with probability spread."""
    nbrs = ring_neighbors(n) if neighbors is None else neighbors
    seeds = rng.random((shots, n)) < delta
    support = seeds.copy()
    width = max((len(v) for v in nbrs), default=0)
    if width:
        coins = rng.random((shots, n, width)) < spread
        for i, vs in enumerate(nbrs):
            for slot, j in enumerate(vs):
                support[:, j] |= seeds[:, i] & coins[:, i, slot]
    letters = rng.integers(1, 4, size=(shots, n)) * support
    x, z = _letters_to_bits(letters)
    return support, x, z


def _to_sample(x_row, z_row, provenance: str) -> ErrorSample:
    n = len(x_row)
    x = int(sum(1 << j for j in np.nonzero(x_row)[0]))
    z = int(sum(1 << j for j in np.nonzero(z_row)[0]))
    p = PauliOp(n, x, z)
    return ErrorSample(p.support, p, provenance)


def sample_iid_pauli(n: int, delta: float, rng: np.random.Generator) -> ErrorSample:
    spec = NoiseSpec("iid_pauli", delta)
    _, x, z = iid_batch(n, delta, 1, rng)
    return _to_sample(x[0], z[0], spec.id)


def sample_local_stochastic_cluster(n: int, delta: float, spread: float, rng: np.random.Generator, neighbors=None) -> ErrorSample:
    spec = NoiseSpec("local_stochastic_cluster", delta, spread)
    _, x, z = cluster_batch(n, delta, spread, 1, rng, neighbors)
    return _to_sample(x[0], z[0], spec.id)


def compose_samples(a: ErrorSample, b: ErrorSample) -> ErrorSample:
    p = a.pauli * b.pauli
    return ErrorSample(p.support, p, f"{a.provenance}*{b.provenance}")


def compose_batches(xa, za, xb, zb):
    """Pauli product of two batches -> (support, x, z)."""
    x = xa ^ xb
    z = za ^ zb
    return x | z, x, z


def compose_parameter(nu_a: float, nu_b: float) -> float:
    return nu_a + nu_b


# support audits ---------------------------------------------------------------


def subset_counts(support: np.ndarray, max_t: int) -> dict[tuple, int]:
    """Number of samples with T subset of A, for every T with 1 <= |T| <= max_t."""
    a = np.asarray(support, dtype=bool)
    n = a.shape[1]
    counts: dict[tuple, int] = {}
    # float matmul is exact for integer counts below 2**24 and uses BLAS
    ai = a.astype(np.float32 if a.shape[0] < (1 << 24) else np.float64)
    single = ai.sum(axis=0)
    for i in range(n):
        counts[(i,)] = int(single[i])
    if max_t >= 2:
        pair = ai.T @ ai
        for i, j in combinations(range(n), 2):
            counts[(i, j)] = int(pair[i, j])
    if max_t >= 3:
        for i in range(n):
            sub = ai[a[:, i]]
            if len(sub) == 0:
                for j, k in combinations(range(i + 1, n), 2):
                    counts[(i, j, k)] = 0
                continue
            m = sub.T @ sub
            for j, k in combinations(range(i + 1, n), 2):
                counts[(i, j, k)] = int(m[j, k])
    if max_t >= 4:
        for i, j in combinations(range(n), 2):
            sub = ai[a[:, i] & a[:, j]]
            m = sub.T @ sub if len(sub) else np.zeros((n, n))
            for k, l in combinations(range(j + 1, n), 2):
                counts[(i, j, k, l)] = int(m[k, l])
    return counts


@dataclass
class LocalStochasticEstimate:
    delta_hat: float
    delta_upper: float
    worst_set: tuple
    samples: int
    max_t: int


def _as_support_array(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        return samples.astype(bool)
    samples = list(samples)
    if not samples:
        raise ValueError("no samples")
    n = samples[0].pauli.n
    arr = np.zeros((len(samples), n), dtype=bool)
    for r, s in enumerate(samples):
        arr[r, list(s.support)] = True
    return arr


def streamed_counts(make_batch, shots: int, max_t: int, chunk: int = 100_000):
    """Accumulate subset counts over chunks; chunk c draws from ``make_batch(size, c)``."""
    total: dict[tuple, int] = {}
    done, c = 0, 0
    while done < shots:
        size = min(chunk, shots - done)
        for t, v in subset_counts(make_batch(size, c), max_t).items():
            total[t] = total.get(t, 0) + v
        done += size
        c += 1
    return total, shots


def _counts_of(samples, max_t: int):
    if isinstance(samples, tuple) and len(samples) == 2 and isinstance(samples[0], dict):
        counts, shots = samples
    else:
        a = _as_support_array(samples)
        shots = a.shape[0]
        if shots < MIN_AUDIT_SAMPLES:
            raise ValueError(f"insufficient samples: {shots} < {MIN_AUDIT_SAMPLES}")
        counts = subset_counts(a, max_t)
    if shots < MIN_AUDIT_SAMPLES:
        raise ValueError(f"insufficient samples: {shots} < {MIN_AUDIT_SAMPLES}")
    counts = {t: c for t, c in counts.items() if len(t) <= max_t}
    return counts, shots


def estimate_local_stochastic_parameter(samples, max_t: int = 3) -> LocalStochasticEstimate:
    """max over |T| <= max_t of P(T subset of A)**(1/|T|), with a Wilson upper version.

    ``samples`` is a boolean (shots, n) support array, a list of ErrorSample,
    or a ``(counts, shots)`` pair from :func:`streamed_counts`.
    """
    if not 1 <= max_t <= 4:
        raise ValueError("max_t must be between 1 and 4")
    counts, shots = _counts_of(samples, max_t)
    best, best_t, upper = 0.0, (), 0.0
    for t, c in counts.items():
        p = c / shots
        val = p ** (1 / len(t))
        if val > best:
            best, best_t = val, t
        hi = wilson_interval(c, shots)[1] ** (1 / len(t))
        upper = max(upper, hi)
    return LocalStochasticEstimate(best, upper, best_t, shots, max_t)


@dataclass
class AuditReport:
    delta: float
    samples: int
    max_t: int
    widths: float
    checked: int
    violations: list = field(default_factory=list)
    worst_margin: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.violations


def audit_local_stochastic(samples, delta: float, max_t: int = 3, widths: float = 4.0) -> AuditReport:
    """Check P(T subset of A) <= delta**|T| + widths * (Wilson interval width) for all |T| <= max_t."""
    counts, shots = _counts_of(samples, max_t)
    rep = AuditReport(delta, shots, max_t, widths, len(counts), worst_margin=math.inf)
    for t, c in counts.items():
        lo, hi = wilson_interval(c, shots)
        limit = delta ** len(t) + widths * (hi - lo)
        margin = limit - c / shots
        rep.worst_margin = min(rep.worst_margin, margin)
        if margin < 0:
            rep.violations.append((t, c / shots, limit))
    return rep


# adversarial truncation ---------------------------------------------------------


def adversarial_truncation(n: int, delta: float) -> tuple[int, float]:
    """t = ceil(5 n delta / (1 + delta)) and the tail bound exp(-n delta / 3)."""
    d = Fraction(repr(float(delta)))
    t = math.ceil(Fraction(5 * n) * d / (1 + d))
    return int(t), math.exp(-n * float(delta) / 3)


def tail_sum(n: int, delta: float, t: int) -> float:
    """sum_{j > t} C(n, j) delta**j, summed in the log domain."""
    if n > 10_000:
        raise ValueError("n above 10^4")
    if t >= n or delta == 0:
        return 0.0
    start = max(t + 1, 0)
    ld = math.log(delta)
    logs = [math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1) + j * ld for j in range(start, n + 1)]
    top = max(logs)
    return math.exp(top) * math.fsum(math.exp(v - top) for v in logs)


def tail_sum_exact(n: int, delta, t: int) -> Fraction:
    """Rational reference value of the same sum (delta taken as its decimal repr)."""
    d = Fraction(repr(float(delta))) if isinstance(delta, float) else Fraction(delta)
    return sum((math.comb(n, j) * d**j for j in range(t + 1, n + 1)), Fraction(0))
