"""Time the compiled kernels against the numpy fallback on representative workloads.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--json PATH]
Each workload is checked for identical output before it is timed.
"""
from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from ftqlab import _kernels_py as pure
from ftqlab.codes import load_code

try:
    from ftqlab import _kernels as compiled
except ImportError:  # pragma: no cover
    compiled = None


def workloads(rng: np.random.Generator) -> dict:
    code = load_code("toric_L5")
    basis = code.stabilizer_basis("Z")[:16]
    vs = [int(rng.integers(1 << 62)) & ((1 << code.n) - 1) for _ in range(20)]

    pts = rng.integers(0, 9, size=(14, 2))
    dist = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2).astype(np.int64)

    nrows, nwords = 256, 4
    xs = rng.integers(0, 2**63, size=(nrows, nwords), dtype=np.uint64)
    zs = rng.integers(0, 2**63, size=(nrows, nwords), dtype=np.uint64)
    rs = rng.integers(0, 2, size=nrows).astype(np.uint8)
    targets = np.arange(1, nrows, dtype=np.int64)
    bits = rng.integers(0, 2**63, size=(4096, 8), dtype=np.uint64)

    def rowsum(mod):
        def go():
            a = (xs.copy(), zs.copy(), rs.copy())
            mod.rowsum_into(*a, targets, 0)
            return a
        return go

    return {
        "coset_min_weight (2^16 elements x 20)": lambda mod: (lambda: [mod.coset_min_weight(v, basis, code.n) for v in vs]),
        "min_weight_matching (14 defects)": lambda mod: (lambda: mod.min_weight_matching(dist)),
        "rowsum_into (256 rows x 256 qubits)": rowsum,
        "popcount_rows (4096 x 512 bits)": lambda mod: (lambda: mod.popcount_rows(bits)),
    }


def _same(a, b) -> bool:
    if isinstance(a, (tuple, list)):
        return len(a) == len(b) and all(_same(u, v) for u, v in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None)
    args = ap.parse_args()
    if compiled is None:
        raise SystemExit("compiled extension not built; run pip install -e . --no-build-isolation")
    rng = np.random.default_rng(7)
    rows = []
    print(f"{'workload':40s} {'python (ms)':>12s} {'cython (ms)':>12s} {'speedup':>8s}")
    for name, make in workloads(rng).items():
        fp, fc = make(pure), make(compiled)
        if not _same(fp(), fc()):
            raise SystemExit(f"{name}: backends disagree")
        tp = min(timeit.repeat(fp, number=1, repeat=args.repeat)) * 1e3
        tc = min(timeit.repeat(fc, number=1, repeat=args.repeat)) * 1e3
        rows.append({"workload": name, "python_ms": tp, "cython_ms": tc, "speedup": tp / tc})
        print(f"{name:40s} {tp:12.3f} {tc:12.3f} {tp / tc:8.1f}x")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
