"""Naive reference implementations used to cross-check the fast code."""

import itertools

import numpy as np


def naive_greedy(servers, requests):
    """O(n^2) greedy with a linear scan; ties go to the leftmost server."""
    free = sorted(float(s) for s in servers)
    chosen = []
    total = 0.0
    for r in requests:
        best = None
        bd = None
        for s in free:  # ascending, so strict improvement keeps the leftmost
            d = abs(r - s)
            if bd is None or d < bd:
                best, bd = s, d
        free.remove(best)
        chosen.append(best)
        total += bd
    return chosen, total


def naive_opt(servers, requests):
    """Optimal matching cost by trying every assignment (tiny inputs only)."""
    rs = sorted(float(r) for r in requests)
    best = None
    for combo in itertools.permutations(servers, len(rs)):
        c = sum(abs(r - s) for r, s in zip(rs, combo))
        if best is None or c < best:
            best = c
    return best


def naive_pool_queries(locations, r):
    """(pred, succ) of r over a plain list of free locations."""
    left = [x for x in locations if x <= r]
    right = [x for x in locations if x >= r]
    return (max(left) if left else None), (min(right) if right else None)


def random_pool_servers(rng, max_zeros=4, max_pos=12):
    zeros = int(rng.integers(0, max_zeros + 1))
    npos = int(rng.integers(0, max_pos + 1))
    pos = np.unique(rng.random(npos))
    return np.concatenate([np.zeros(zeros), pos])
