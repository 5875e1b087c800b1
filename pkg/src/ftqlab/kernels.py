"""Backend selection for the hot kernels.

The compiled extension is used when it imports; setting ``FTQLAB_PURE=1``
forces the numpy fallback. Both backends return identical results.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("FTQLAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

coset_min_weight = _impl.coset_min_weight
min_weight_matching = _impl.min_weight_matching
rowsum_phase = _impl.rowsum_phase
rowsum_into = _impl.rowsum_into
popcount_rows = _impl.popcount_rows

__all__ = [
    "BACKEND",
    "coset_min_weight",
    "min_weight_matching",
    "rowsum_phase",
    "rowsum_into",
    "popcount_rows",
]
