"""Deterministic per-trial seeding.

Every experiment takes one master seed; trial i uses
splitmix64(master XOR (GOLDEN * (i + 1))), so results do not depend on how
trials are split across workers.
"""

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK


def trial_seed(master: int, index: int) -> int:
    return splitmix64((master & _MASK) ^ ((_GOLDEN * (index + 1)) & _MASK))


def rng_for_trial(master: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(trial_seed(master, index)))
