"""Golden representation cases: JSON records checked by the test suite and ``ftqlab rep-check``.

Record fields: ``code_id`` (a shipped code), ``error_basis`` (Pauli strings,
identity included), ``channel_kind`` and ``expected_residual_max``.
"""
from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .channels import (
    CPTP_TOL, Superoperator, build_derived_code, check_measurement_rule, check_prep_rule, check_representation,
    choi_distance_bounds, factor_unitary_rule, logical_unitary, pauli_channel, to_code_coordinates, trace_norm,
)
from .codes import load_code
from .pauli import PauliOp

CHANNEL_KINDS = (
    "transversal_X", "transversal_Z", "unitary_rule_X", "unitary_rule_Z", "prep_0", "prep_plus", "measure_Z",
)
RECORD_KEYS = {"code_id", "error_basis", "channel_kind", "expected_residual_max"}


def _transversal(code, letter: str) -> Superoperator:
    return pauli_channel(PauliOp.from_string(letter * code.n))


def _majority_measurement(n: int) -> Superoperator:
    """Measure every qubit in Z and output the majority bit."""
    ks = []
    for b in range(1 << n):
        k = np.zeros((2, 1 << n), dtype=complex)
        k[int(bin(b).count("1") * 2 > n), b] = 1
        ks.append(k)
    return Superoperator.from_kraus(ks)


def load_cases() -> list[dict]:
    out = []
    root = resources.files("ftqlab") / "data" / "golden"
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            data = json.loads(entry.read_text(encoding="utf-8"))
            out += data if isinstance(data, list) else [data]
    return out


def validate_record(rec: dict) -> None:
    missing = RECORD_KEYS - set(rec)
    extra = set(rec) - RECORD_KEYS
    if missing or extra:
        raise ValueError(f"golden record keys: missing {sorted(missing)}, unknown {sorted(extra)}")
    if rec["channel_kind"] not in CHANNEL_KINDS:
        raise ValueError(f"unknown channel_kind {rec['channel_kind']!r}")


def run_case(rec: dict) -> dict:
    """Residual of the case's rule; pass iff residual <= expected_residual_max and the maps are CP."""
    validate_record(rec)
    code = load_code(rec["code_id"])
    errors = [PauliOp.from_string(s) for s in rec["error_basis"]]
    d = build_derived_code(code, errors)
    kind = rec["channel_kind"]
    detail: dict = {}
    if kind.startswith("transversal_"):
        letter = kind[-1]
        rep = check_representation(_transversal(code, letter), logical_unitary(letter), d, d)
        residual = max(rep.residuals.values())
        ok_maps = rep.r_cp and rep.s_cp
        detail = {k: float(v) for k, v in rep.residuals.items()}
    elif kind.startswith("unitary_rule_"):
        letter = kind[-1]
        p = logical_unitary(letter)
        r = to_code_coordinates(_transversal(code, letter), d, d)
        f = factor_unitary_rule(r, d, p, tol=float("inf"))
        residual = choi_distance_bounds(r, p.tensor(f))[1]
        ok_maps = f.is_channel(CPTP_TOL)
        detail = {"f_dim": f.in_dim}
    elif kind.startswith("prep_"):
        psi = np.array([1, 0]) if kind == "prep_0" else np.array([1, 1]) / np.sqrt(2)
        phys = d.v.matrix @ psi
        t = Superoperator.preparation(np.outer(phys, phys.conj()))
        r = d.compression().compose(t)
        gamma = check_prep_rule(r, d, psi, tol=float("inf"))
        omega = r.apply(np.ones((1, 1)))
        residual = trace_norm(omega - np.kron(np.outer(psi, psi.conj()), gamma))
        ok_maps = bool(np.linalg.eigvalsh(gamma).min() > -CPTP_TOL)
    elif kind == "measure_Z":
        r = to_code_coordinates(_majority_measurement(code.n), d, None)
        p = Superoperator.measurement(np.eye(2))
        residual = check_measurement_rule(r, d, p)
        ok_maps = r.is_cp(CPTP_TOL)
    else:  # pragma: no cover - validate_record guards this
        raise ValueError(kind)
    residual = float(residual)
    return {
        "code_id": rec["code_id"], "channel_kind": kind, "error_basis": list(rec["error_basis"]),
        "residual": residual, "expected_residual_max": rec["expected_residual_max"],
        "pass": bool(ok_maps and residual <= rec["expected_residual_max"]), "detail": detail,
    }
