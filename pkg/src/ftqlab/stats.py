from __future__ import annotations

import math

Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("need at least one trial")
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def wilson_width(successes: int, trials: int, z: float = Z95) -> float:
    lo, hi = wilson_interval(successes, trials, z)
    return hi - lo


def mean_ci(values, z: float = Z95) -> tuple[float, float, float]:
    import numpy as np

    v = np.asarray(values, dtype=float)
    m = float(v.mean())
    if len(v) < 2:
        return m, m, m
    se = float(v.std(ddof=1)) / math.sqrt(len(v))
    return m, m - z * se, m + z * se
