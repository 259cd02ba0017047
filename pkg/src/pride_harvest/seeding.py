"""Deterministic seed derivation.

A master seed and a path of small integers (run index, driver id, stream
tag, ...) map to an independent stream via ``numpy.random.SeedSequence``
spawn keys, so any single draw can be replayed without rerunning
everything that came before it.
"""
from __future__ import annotations

import numpy as np

# stream tags used as the last element of a seed path
WORLD = 0
RIDER = 1
KEYS = 2
SHUFFLE = 3
BLIND = 4
PREDICTION = 5


def seed_sequence(master: int, *path: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=tuple(int(p) for p in path))


def derive_seed(master: int, *path: int) -> int:
    lo, hi = seed_sequence(master, *path).generate_state(2, dtype=np.uint64)
    return (int(hi) << 64) | int(lo)


def rng_for(master: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(master, *path))
