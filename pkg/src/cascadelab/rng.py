"""Random streams.

Streams are ``numpy.random.Generator`` objects backed by Philox, a
counter-based bit generator. Replica streams are derived from a root seed
by ``SeedSequence(entropy=root, spawn_key=(point, replica))`` so any
replica can be regenerated in isolation and worker count never changes
which numbers a replica sees.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed: int | None = None, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def replica_rng(root_seed: int, point: int, replica: int) -> np.random.Generator:
    return make_rng(root_seed, point, replica)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return make_rng(None if rng is None else int(rng))
    raise TypeError(f"cannot build a random stream from {type(rng).__name__}")
