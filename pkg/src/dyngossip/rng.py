"""Seed splitting.

Every random stream in a run is derived from the single run seed::

    stream(seed, purpose, *ids) -> numpy Generator over SeedSequence([seed, purpose, *ids])

Purposes are small fixed integers so that adding a new consumer never
shifts an existing stream.
"""
from __future__ import annotations

import numpy as np

ADVERSARY = 1
NODE = 2
ELECTION = 3
PLACEMENT = 4
KPRIME = 5
LAB = 6


def stream(seed: int, purpose: int, *ids: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(purpose), *(int(i) for i in ids)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
