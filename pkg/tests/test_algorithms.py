"""Hierarchical greedy, threshold policy, and trace checks."""

import math

import numpy as np
import pytest

from linematch import algorithms, instances
from linematch.algorithms import LevelTree
from linematch.core import Instance, ServerPool, run_policy


def test_level_tree_leaf_index():
    tree = LevelTree(8, ServerPool([0.5]))
    assert tree.l0 == 3 and tree.size == 8
    assert tree.leaf_index(0.0) == 0
    assert tree.leaf_index(0.125) == 0   # leftmost interval is [0, 1/8]
    assert tree.leaf_index(0.1251) == 1
    assert tree.leaf_index(1.0) == 7
    a, b = tree.interval(0, 3)
    assert (a, b) == (0.375, 0.5)
    a, b = tree.interval(3, 0)
    assert (a, b) == (0.0, 1.0)


def test_level_tree_lowest_nonempty_and_decrement():
    pool = ServerPool([0.3, 0.9])
    tree = LevelTree(8, pool)
    level, idx = tree.lowest_nonempty(0.3)
    assert level == 0
    a, b = tree.interval(level, idx)
    assert a < 0.3 <= b
    tree.decrement(0.3)
    level, idx = tree.lowest_nonempty(0.3)
    a, b = tree.interval(level, idx)
    assert a < 0.9 <= b  # had to climb until the interval holds 0.9
    tree.decrement(0.9)
    assert tree.lowest_nonempty(0.3) is None


def test_hgreedy_respects_interval_and_level_bound():
    rng = np.random.default_rng(20)
    for _ in range(30):
        n = int(rng.integers(4, 100))
        servers = np.sort(rng.random(n))
        inst = Instance(servers, rng.random(n), {})
        trace = run_policy(inst, "hgreedy")
        l0 = max(0, math.ceil(math.log2(n)))
        # each match stays inside its reported dyadic interval
        for t in range(n):
            level = algorithms.level_of_match(trace, t)
            width = 2.0 ** (level - l0)
            assert trace.costs[t] <= width + 1e-12
        assert algorithms.hg_cost_level_bound(trace, n)


def test_hgreedy_picks_nearest_within_interval():
    # one free server on each side of the request inside the same leaf
    servers = np.array([0.51, 0.59])
    inst = Instance(servers, np.array([0.56, 0.5]), {})
    trace = run_policy(inst, "hgreedy")
    assert trace.servers[0] == 0.59  # 0.03 away beats 0.05
    assert trace.servers[1] == 0.51


def test_threshold_sends_small_requests_to_zero():
    servers = np.array([0.0, 0.0, 0.5, 0.9])
    inst = Instance(servers, np.array([0.05, 0.05, 0.05, 0.6]), {})
    trace = run_policy(inst, "threshold", y0=0.1)
    assert list(trace.servers[:2]) == [0.0, 0.0]
    assert trace.servers[2] == 0.5  # zeros exhausted, falls back to greedy
    assert trace.servers[3] == 0.5 or trace.servers[3] == 0.9


def test_threshold_default_y0_matches_explicit():
    inst = instances.gen_fully_random(64, seed=5)
    a = run_policy(inst, "threshold")
    b = run_policy(inst, "threshold", y0=64 ** -0.2)
    assert np.array_equal(a.servers, b.servers)


def test_threshold_equals_greedy_above_cutoff():
    rng = np.random.default_rng(21)
    servers = np.sort(rng.random(50))
    requests = 0.5 + 0.5 * rng.random(50)  # all above any reasonable y0
    inst = Instance(servers, requests, {})
    a = run_policy(inst, "threshold", y0=0.2)
    b = run_policy(inst, "greedy")
    assert np.array_equal(a.servers, b.servers)


def test_threshold_choice_single_step():
    pool = ServerPool([0.0, 0.3])
    assert algorithms.threshold_choice(pool, 0.05, 0.1) == 0.0
    assert algorithms.threshold_choice(pool, 0.25, 0.1) == 0.3
    pool.remove(0.0)
    assert algorithms.threshold_choice(pool, 0.05, 0.1) == 0.3


def test_check_neighboring_accepts_greedy_and_rejects_doctored():
    inst = instances.gen_fully_random(30, seed=9)
    trace = run_policy(inst, "greedy")
    algorithms.check_neighboring(inst, trace)
    # a hand-built trace that jumps over a free server must be rejected
    inst2 = Instance(np.array([0.1, 0.5, 0.9]),
                     np.array([0.12, 0.88, 0.5]), {})
    requests = inst2.requests
    doctored = np.array([0.9, 0.1, 0.5])  # 0.9 skips over free 0.5
    bad = type(trace)(requests, doctored, np.abs(requests - doctored),
                      float(np.abs(requests - doctored).sum()), "greedy")
    with pytest.raises(ValueError):
        algorithms.check_neighboring(inst2, bad)


def test_hgreedy_prefers_its_own_leaf_over_the_global_nearest():
    # 4 requests -> l0 = 2, leaf width 0.25.  The first request's leaf
    # (0.25, 0.5] holds 0.5, so hierarchical greedy must take it even though
    # 0.24 in the neighboring leaf is much closer (and is what greedy takes).
    servers = np.array([0.24, 0.5, 0.9, 0.95])
    requests = np.array([0.26, 0.9, 0.95, 0.24])
    inst = Instance(servers, requests, {})
    tr_h = run_policy(inst, "hgreedy")
    tr_g = run_policy(inst, "greedy")
    assert tr_h.servers[0] == 0.5
    assert tr_g.servers[0] == 0.24
