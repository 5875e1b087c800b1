"""Counter-based, splittable random streams.

Stream ``i`` of master seed ``s`` is a Philox generator keyed by the
SeedSequence ``(s, spawn_key=(i,))``. Streams with different indices are
independent, so trials can run in any order or in parallel.
"""
from __future__ import annotations

import os

import numpy as np

ENV_SEED = "FTQLAB_SEED"
DEFAULT_SEED = 20240601


def stream(master_seed: int, index: int) -> np.random.Generator:
    if master_seed < 0 or index < 0:
        raise ValueError("seed and stream index must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=(index,))))


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Stream addressed by a tuple, e.g. (experiment, trial)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=tuple(path))))


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get(ENV_SEED)
    if env:
        return int(env)
    return DEFAULT_SEED


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, tuple):
        return substream(*rng)
    return stream(int(rng), 0)
