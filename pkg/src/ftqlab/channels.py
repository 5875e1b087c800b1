"""Dense superoperators at tiny dimension, derived codes and the representation checks.

Choi convention (unnormalised)::

    J(Phi) = sum_ij |i><j| (x) Phi(|i><j|)

with the input factor first. Internally the Choi matrix is also viewed as a
4-tensor ``J4[i, a, j, b] = Phi(|i><j|)[a, b]``.

Spaces attached to a derived code ``d``:

* N, the physical space of dimension 2**n;
* L, the code space, handled in the coordinates of ``d.u``: index psi*f + s
  stands for U(|psi> (x) |s>) = E_s V|psi>.

In those coordinates the embedding J is U(.)U^dagger, its adjoint is the
compression U^dagger(.)U, and mu* restricted to L is the partial trace over F.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pauli import CssCode, PauliOp, syndrome

DENSE_CAP = 1 << 12
EXACT_TOL = 1e-10
CPTP_TOL = 1e-9


class DimensionError(ValueError):
    pass


class RuleViolation(ValueError):
    """A transformation rule's hypothesis or conclusion fails beyond tolerance."""


@dataclass(frozen=True)
class DenseOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2:
            raise DimensionError("operator must be a matrix")
        if m.shape[0] > DENSE_CAP or m.shape[1] > DENSE_CAP:
            raise DimensionError("dense cap exceeded")
        object.__setattr__(self, "matrix", m)

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def dag(self) -> np.ndarray:
        return self.matrix.conj().T

    def isometry_residual(self) -> float:
        return float(np.linalg.norm(self.dag @ self.matrix - np.eye(self.cols)))

    def is_isometry(self, tol: float = EXACT_TOL) -> bool:
        return self.isometry_residual() <= tol

    def is_unitary(self, tol: float = EXACT_TOL) -> bool:
        return self.rows == self.cols and self.is_isometry(tol)


class Superoperator:
    """Linear map L(C^in_dim) -> L(C^out_dim) stored by its Choi matrix."""

    def __init__(self, choi: np.ndarray, in_dim: int, out_dim: int, kraus=None):
        if in_dim * out_dim > DENSE_CAP:
            raise DimensionError(f"Choi dimension {in_dim * out_dim} exceeds the dense cap {DENSE_CAP}")
        choi = np.asarray(choi, dtype=complex)
        if choi.shape != (in_dim * out_dim, in_dim * out_dim):
            raise DimensionError("Choi matrix has the wrong shape")
        self.choi = choi
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.kraus = None if kraus is None else [np.asarray(k, dtype=complex) for k in kraus]

    # constructors
    @classmethod
    def from_kraus(cls, kraus) -> "Superoperator":
        ks = [np.asarray(k, dtype=complex) for k in kraus]
        out_dim, in_dim = ks[0].shape
        if in_dim * out_dim > DENSE_CAP:
            raise DimensionError("dense cap exceeded")
        j4 = np.zeros((in_dim, out_dim, in_dim, out_dim), dtype=complex)
        for k in ks:
            if k.shape != (out_dim, in_dim):
                raise DimensionError("Kraus operators differ in shape")
            # J4[i,a,j,b] = K[a,i] conj(K[b,j])
            j4 += np.einsum("ai,bj->iajb", k, k.conj())
        return cls(j4.reshape(in_dim * out_dim, in_dim * out_dim), in_dim, out_dim, ks)

    @classmethod
    def from_unitary(cls, u) -> "Superoperator":
        return cls.from_kraus([u])

    @classmethod
    def identity(cls, d: int) -> "Superoperator":
        return cls.from_kraus([np.eye(d)])

    @classmethod
    def from_function(cls, fn, in_dim: int, out_dim: int) -> "Superoperator":
        j4 = np.zeros((in_dim, out_dim, in_dim, out_dim), dtype=complex)
        for i in range(in_dim):
            for j in range(in_dim):
                e = np.zeros((in_dim, in_dim), dtype=complex)
                e[i, j] = 1
                j4[i, :, j, :] = fn(e)
        return cls(j4.reshape(in_dim * out_dim, -1), in_dim, out_dim)

    @classmethod
    def preparation(cls, rho) -> "Superoperator":
        """Channel from the trivial space C^1 that outputs rho."""
        rho = np.asarray(rho, dtype=complex)
        return cls(rho.copy(), 1, rho.shape[0])

    @classmethod
    def trace(cls, d: int) -> "Superoperator":
        return cls.from_kraus([np.eye(d)[i:i + 1, :] for i in range(d)])

    @classmethod
    def depolarizing(cls, d: int, p: float) -> "Superoperator":
        """(1 - p) rho + p tr(rho) I / d."""
        return cls.from_function(lambda e: (1 - p) * e + p * np.trace(e) * np.eye(d) / d, d, d)

    @classmethod
    def measurement(cls, basis) -> "Superoperator":
        """Projective measurement in the given orthonormal basis columns, classical output."""
        b = np.asarray(basis, dtype=complex)
        d = b.shape[0]
        ks = []
        for r in range(b.shape[1]):
            k = np.zeros((b.shape[1], d), dtype=complex)
            k[r, :] = b[:, r].conj()
            ks.append(k)
        return cls.from_kraus(ks)

    # structure
    @property
    def j4(self) -> np.ndarray:
        return self.choi.reshape(self.in_dim, self.out_dim, self.in_dim, self.out_dim)

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return np.einsum("ij,iajb->ab", rho, self.j4)

    __call__ = apply

    def compose(self, first: "Superoperator") -> "Superoperator":
        """self o first."""
        if first.out_dim != self.in_dim:
            raise DimensionError(f"cannot compose: {first.out_dim} -> {self.in_dim}")
        j4 = np.einsum("iajb,acbd->icjd", first.j4, self.j4)
        kraus = None
        if first.kraus is not None and self.kraus is not None and len(first.kraus) * len(self.kraus) <= 256:
            kraus = [k2 @ k1 for k1 in first.kraus for k2 in self.kraus]
        return Superoperator(j4.reshape(first.in_dim * self.out_dim, -1), first.in_dim, self.out_dim, kraus)

    def __matmul__(self, first: "Superoperator") -> "Superoperator":
        return self.compose(first)

    def tensor(self, other: "Superoperator") -> "Superoperator":
        """self (x) other with self's factor most significant."""
        a, b = self.j4, other.j4
        j = np.einsum("iajb,kcld->ikacjlbd", a, b)
        din = self.in_dim * other.in_dim
        dout = self.out_dim * other.out_dim
        kraus = None
        if self.kraus is not None and other.kraus is not None and len(self.kraus) * len(other.kraus) <= 256:
            kraus = [np.kron(k1, k2) for k1 in self.kraus for k2 in other.kraus]
        return Superoperator(j.reshape(din * dout, din * dout), din, dout, kraus)

    def adjoint(self) -> "Superoperator":
        """Heisenberg-picture dual map."""
        j4 = np.conj(self.j4).transpose(1, 0, 3, 2)
        kraus = None if self.kraus is None else [k.conj().T for k in self.kraus]
        return Superoperator(j4.reshape(self.in_dim * self.out_dim, -1), self.out_dim, self.in_dim, kraus)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        if (self.in_dim, self.out_dim) != (other.in_dim, other.out_dim):
            raise DimensionError("dimension mismatch")
        return Superoperator(self.choi - other.choi, self.in_dim, self.out_dim)

    def partial_trace_output(self) -> np.ndarray:
        return np.einsum("iaja->ij", self.j4)

    def cp_residual(self) -> float:
        h = (self.choi + self.choi.conj().T) / 2
        return max(0.0, -float(np.linalg.eigvalsh(h).min()))

    def tp_residual(self) -> float:
        return float(np.linalg.norm(self.partial_trace_output() - np.eye(self.in_dim)))

    def is_cp(self, tol: float = CPTP_TOL) -> bool:
        return self.cp_residual() <= tol

    def is_tp(self, tol: float = CPTP_TOL) -> bool:
        return self.tp_residual() <= tol

    def is_channel(self, tol: float = CPTP_TOL) -> bool:
        return self.is_cp(tol) and self.is_tp(tol)

    def choi_rank(self, tol: float = 1e-9) -> int:
        return int((np.abs(np.linalg.eigvalsh((self.choi + self.choi.conj().T) / 2)) > tol).sum())


def trace_norm(m: np.ndarray) -> float:
    return float(np.linalg.svd(m, compute_uv=False).sum())


def choi_distance_bounds(t1: Superoperator, t2: Superoperator) -> tuple[float, float]:
    """(||J||_1 / in_dim, ||J||_1) for J the Choi matrix of t1 - t2.

    These sandwich the diamond norm: the maximally entangled input gives the
    lower bound; any input is a contraction of the unnormalised Choi matrix,
    which gives the upper one.
    """
    if (t1.in_dim, t1.out_dim) != (t2.in_dim, t2.out_dim):
        raise DimensionError("dimension mismatch")
    tn = trace_norm(t1.choi - t2.choi)
    return tn / t1.in_dim, tn


# codes --------------------------------------------------------------------------


def _stabilizer_projector(code: CssCode) -> np.ndarray:
    dim = 1 << code.n
    proj = np.eye(dim, dtype=complex)
    for g in code.generators():
        proj = proj @ (np.eye(dim) + g.to_matrix()) / 2
    return proj


def build_encoding_isometry(code: CssCode) -> DenseOperator:
    """Columns |0bar>, |1bar> (k=1) or the 2**k logical computational basis states."""
    if (1 << code.n) > DENSE_CAP:
        raise DimensionError(f"2^{code.n} exceeds the dense cap")
    dim = 1 << code.n
    proj = _stabilizer_projector(code)
    for lz in code.logical_z:
        proj = proj @ (np.eye(dim) + lz.to_matrix()) / 2
    # |0...0> is a +1 eigenvector of every Z-type operator, so the projection is nonzero
    v0 = proj[:, 0]
    v0 = v0 / np.linalg.norm(v0)
    cols = []
    for m in range(1 << code.k):
        v = v0
        for i in range(code.k):
            if (m >> (code.k - 1 - i)) & 1:
                v = code.logical_x[i].to_matrix() @ v
        cols.append(v)
    return DenseOperator(np.stack(cols, axis=1))


@dataclass
class DerivedCode:
    base: CssCode
    error_basis: tuple
    v: DenseOperator
    u: DenseOperator
    f_dim: int
    syndromes: tuple = field(default=())

    @property
    def n_dim(self) -> int:
        return 1 << self.base.n

    @property
    def l_dim(self) -> int:
        return 2 * self.f_dim

    def embedding(self) -> Superoperator:
        """J: L -> N in code coordinates."""
        return Superoperator.from_kraus([self.u.matrix])

    def compression(self) -> Superoperator:
        """J*: N -> L, rho -> U^dagger rho U (trace-decreasing off L)."""
        return Superoperator.from_kraus([self.u.dag])

    def logical_decoder(self) -> Superoperator:
        """mu* on L coordinates: partial trace over F."""
        return partial_trace_second(2, self.f_dim)

    def encoder(self, eta=None) -> Superoperator:
        """rho -> U(rho (x) eta)U^dagger in code coordinates (eta defaults to |s_I><s_I|)."""
        if eta is None:
            eta = np.zeros((self.f_dim, self.f_dim), dtype=complex)
            eta[0, 0] = 1
        eta = np.asarray(eta, dtype=complex)
        return Superoperator.from_function(lambda e: np.kron(e, eta), 2, self.l_dim)


def partial_trace_second(d1: int, d2: int) -> Superoperator:
    ks = []
    for s in range(d2):
        k = np.kron(np.eye(d1), np.eye(d2)[s:s + 1, :])
        ks.append(k)
    return Superoperator.from_kraus(ks)


def build_derived_code(code: CssCode, errors) -> DerivedCode:
    if code.k != 1:
        raise ValueError("derived codes are built from k=1 codes")
    errors = list(errors)
    if not any(e.x == 0 and e.z == 0 for e in errors):
        raise ValueError("error basis must contain the identity")
    syns = [syndrome(code, e).bits for e in errors]
    if len(set(syns)) != len(syns):
        seen = {}
        for e, s in zip(errors, syns):
            if s in seen:
                raise ValueError(f"duplicate syndrome {s} for {seen[s]} and {e}")
            seen[s] = e
    # identity first so that |s_I> is basis vector 0
    order = sorted(range(len(errors)), key=lambda i: (errors[i].x != 0 or errors[i].z != 0, i))
    errors = [errors[i] for i in order]
    syns = [syns[i] for i in order]
    v = build_encoding_isometry(code)
    f = len(errors)
    cols = np.zeros((1 << code.n, 2 * f), dtype=complex)
    for s, e in enumerate(errors):
        # drop the global phase so that U^dagger E V|psi> = |psi>|s> exactly
        em = PauliOp(e.n, e.x, e.z, e.phase - e.hermitian_phase()).to_matrix()
        for psi in range(2):
            cols[:, psi * f + s] = em @ v.matrix[:, psi]
    u = DenseOperator(cols)
    if not u.is_isometry():
        raise ValueError("error images are not orthonormal")
    return DerivedCode(code, tuple(errors), v, u, f, tuple(syns))


def ideal_decoder(d: DerivedCode) -> Superoperator:
    """mu* = tr_F o U^dagger(.)U as a map from N to the logical qubit."""
    ks = []
    for s in range(d.f_dim):
        sel = np.kron(np.eye(2), np.eye(d.f_dim)[s:s + 1, :])
        ks.append(sel @ d.u.dag)
    return Superoperator.from_kraus(ks)


def to_code_coordinates(t: Superoperator, d_in: DerivedCode | None, d_out: DerivedCode | None) -> Superoperator:
    """J_out* o T o J_in for a map T given on physical spaces (None leaves a side unchanged)."""
    out = t
    if d_in is not None:
        out = out.compose(d_in.embedding())
    if d_out is not None:
        out = d_out.compression().compose(out)
    return out


@dataclass
class RepresentationReport:
    r: Superoperator
    s: Superoperator
    residuals: dict
    bounds: dict
    r_cp: bool
    s_cp: bool
    r_tp: bool
    s_tp: bool
    tol: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values()) and self.r_cp and self.s_cp

    @property
    def weak_passed(self) -> bool:
        return self.residuals["comm1"] <= self.tol and self.residuals["comm2"] <= self.tol and self.r_cp


def check_representation(t: Superoperator, p: Superoperator, d: DerivedCode, d2: DerivedCode,
                         tol: float = EXACT_TOL) -> RepresentationReport:
    """R := J'* o T o J and S := J'* o T; residuals of the three diagram equations.

    Each residual is the upper Choi bound on the diamond distance; the lower
    bound is reported alongside in ``bounds``.
    """
    if t.in_dim != d.n_dim or t.out_dim != d2.n_dim:
        raise DimensionError("T does not act between the codes' physical spaces")
    if p.in_dim != 2 or p.out_dim != 2:
        raise DimensionError("P must act on one logical qubit")
    j, j2c, j2 = d.embedding(), d2.compression(), d2.embedding()
    r = j2c.compose(t.compose(j))
    s = j2c.compose(t)
    eq1 = (d2.logical_decoder().compose(r), p.compose(d.logical_decoder()))
    eq2 = (j2.compose(r), t.compose(j))
    eq3 = (j2.compose(s), t)
    bounds = {name: choi_distance_bounds(a, b) for name, (a, b) in zip(("comm1", "comm2", "comm3"), (eq1, eq2, eq3))}
    residuals = {k: v[1] for k, v in bounds.items()}
    return RepresentationReport(r, s, residuals, bounds, r.is_cp(CPTP_TOL), s.is_cp(CPTP_TOL),
                                r.is_tp(CPTP_TOL), s.is_tp(CPTP_TOL), tol)


def _is_unitary_channel(p: Superoperator, tol: float = CPTP_TOL) -> bool:
    return p.in_dim == p.out_dim and p.is_channel(tol) and p.choi_rank() == 1


def factor_unitary_rule(r: Superoperator, d: DerivedCode, p: Superoperator, tol: float = EXACT_TOL) -> Superoperator:
    """Extract F from R = P (x) F; raises when the factorisation fails.

    R acts on L in code coordinates (use :func:`to_code_coordinates` for a physical map).
    """
    if not _is_unitary_channel(p):
        raise RuleViolation("P is not a unitary channel")
    if r.in_dim != d.l_dim or r.out_dim != d.l_dim:
        raise DimensionError("R must map L to L")
    mu = d.logical_decoder()
    hyp = choi_distance_bounds(mu.compose(r), p.compose(mu))[1]
    if hyp > CPTP_TOL:
        raise RuleViolation(f"R does not satisfy mu* o R = P o mu* (residual {hyp:.3e})")
    f = d.f_dim
    zero = np.zeros((2, 2), dtype=complex)
    zero[0, 0] = 1

    def f_map(tau):
        out = r.apply(np.kron(zero, tau)).reshape(2, f, 2, f)
        return np.einsum("msmt->st", out)

    fch = Superoperator.from_function(f_map, f, f)
    resid = choi_distance_bounds(r, p.tensor(fch))[1]
    if resid > tol:
        raise RuleViolation(f"R is not of product form P (x) F (residual {resid:.3e})")
    if not fch.is_channel(CPTP_TOL):
        raise RuleViolation("extracted F is not a channel")
    return fch


def check_prep_rule(r: Superoperator, d: DerivedCode, psi, tol: float = EXACT_TOL) -> np.ndarray:
    """Return gamma with R(1) = |psi><psi| (x) gamma in code coordinates; raise if it does not factorise."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    if r.in_dim != 1 or r.out_dim != d.l_dim:
        raise DimensionError("a preparation maps C^1 into L")
    omega = r.apply(np.ones((1, 1)))
    f = d.f_dim
    gamma = np.einsum("msmt->st", omega.reshape(2, f, 2, f))
    target = np.kron(np.outer(psi, psi.conj()), gamma)
    resid = trace_norm(omega - target)
    if resid > tol:
        raise RuleViolation(f"prepared state does not factorise as |psi><psi| (x) gamma (residual {resid:.3e})")
    return gamma


def check_measurement_rule(r: Superoperator, d: DerivedCode, p: Superoperator) -> float:
    """Choi residual of R = P (x) tr_F, with R given on L in code coordinates."""
    if p.in_dim != 2:
        raise DimensionError("P must act on one logical qubit")
    c = p.choi.reshape(2, p.out_dim, 2, p.out_dim)
    # classical output: P(rho) diagonal for every input
    off = c.copy()
    for a in range(p.out_dim):
        off[:, a, :, a] = 0
    if np.abs(off).max() > CPTP_TOL:
        raise DimensionError("P must have classical (diagonal) output")
    if r.in_dim != d.l_dim or r.out_dim != p.out_dim:
        raise DimensionError("R must map L to P's output space")
    return choi_distance_bounds(r, p.compose(d.logical_decoder()))[1]


# physical maps used by the golden cases ----------------------------------------------


def pauli_channel(p: PauliOp) -> Superoperator:
    return Superoperator.from_unitary(p.to_matrix())


def logical_unitary(letter: str) -> Superoperator:
    mats = {
        "I": np.eye(2),
        "X": np.array([[0, 1], [1, 0]]),
        "Y": np.array([[0, -1j], [1j, 0]]),
        "Z": np.diag([1, -1]),
        "H": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
        "S": np.diag([1, 1j]),
    }
    return Superoperator.from_unitary(mats[letter])


def ideal_recovery(d: DerivedCode) -> Superoperator:
    """Syndrome measurement plus min-weight correction back to the base code space.

    Kraus operators E_s^dagger Pi_s over all syndromes reachable by the basis;
    with a complete syndrome basis this is trace preserving on N.
    """
    code = d.base
    dim = d.n_dim
    gens = [g.to_matrix() for g in code.generators()]
    ks = []
    covered = np.zeros((dim, dim), dtype=complex)
    for e, s in zip(d.error_basis, d.syndromes):
        proj = np.eye(dim, dtype=complex)
        for bit, g in zip(s, gens):
            proj = proj @ (np.eye(dim) + (-1) ** bit * g) / 2
        em = PauliOp(e.n, e.x, e.z, e.phase - e.hermitian_phase()).to_matrix()
        ks.append(em.conj().T @ proj)
        covered += proj
    if np.linalg.norm(covered - np.eye(dim)) > EXACT_TOL:
        raise ValueError("error basis does not cover every syndrome; recovery would not be trace preserving")
    return Superoperator.from_kraus(ks)
