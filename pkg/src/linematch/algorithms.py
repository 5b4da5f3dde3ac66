"""Online policies beyond plain greedy, and trace checks.

Hierarchical greedy works over the dyadic partitions of [0, 1] at levels
0..l0 with l0 = ceil(log2 n): a request is matched to the closest free
server inside the lowest-level dyadic interval around it that still holds a
free server.  Intervals are half-open (x, y], except the leftmost one which
also contains 0.  A match made at level l costs at most 2^(l - l0).

The threshold policy sends every request in [0, y0] to a server at 0 while
one is free (y0 defaults to n^(-1/5)) and is greedy otherwise.  Both
policies make neighboring matches: the chosen server is always one of the
two free servers adjacent to the request.
"""

import math

import numpy as np

from .core import Instance, MatchTrace, ServerPool


class LevelTree:
    """Free-server counters over the dyadic intervals of [0, 1].

    Flat heap layout: node 1 is the root, leaves sit at offset 2^l0.  Only
    counts live here; the actual nearest-server query inside an interval is
    answered by the ServerPool.
    """

    def __init__(self, n_requests: int, pool: ServerPool):
        if n_requests < 1:
            raise ValueError("need at least one request")
        self.l0 = max(0, math.ceil(math.log2(n_requests)))
        self.size = 1 << self.l0
        tree = [0] * (2 * self.size)
        for loc in pool.free_locations():
            i = self.leaf_index(loc) + self.size
            while i:
                tree[i] += 1
                i >>= 1
        self.tree = tree

    def leaf_index(self, x: float) -> int:
        """Leaf of x under (a, b] intervals, leftmost closed at 0."""
        if x <= 0.0:
            return 0
        return min(self.size - 1, math.ceil(x * self.size) - 1)

    def interval(self, level: int, idx: int):
        """(a, b] endpoints of interval idx at the given level."""
        width = 2.0 ** (level - self.l0)
        return idx * width, (idx + 1) * width

    def lowest_nonempty(self, x: float):
        """(level, idx) of the lowest-level interval around x with a free
        server; None if the whole pool is empty."""
        node = self.leaf_index(x) + self.size
        tree = self.tree
        while node and tree[node] == 0:
            node >>= 1
        if node == 0:
            return None
        depth = node.bit_length() - 1
        # level counts from the leaves: leaves are level 0, the root is l0,
        # so a level-l interval has width 2^(l - l0)
        return self.l0 - depth, node - (1 << depth)

    def decrement(self, loc: float) -> None:
        i = self.leaf_index(loc) + self.size
        tree = self.tree
        while i:
            tree[i] -= 1
            i >>= 1


def run_hierarchical_greedy(pool: ServerPool, requests) -> MatchTrace:
    n = len(requests)
    tree = LevelTree(n, pool)
    l0 = tree.l0
    chosen = np.empty(n)
    levels = np.empty(n, dtype=np.int64)
    for t in range(n):
        r = requests[t]
        found = tree.lowest_nonempty(r)
        if found is None:
            raise RuntimeError("no free server left at step %d" % t)
        level, idx = found
        a, b = tree.interval(level, idx)
        left = pool.pred(r)
        if left is not None and not (left > a or (a == 0.0 and left == 0.0)):
            left = None  # outside (a, b]
        right = pool.succ(r)
        if right is not None and right > b:
            right = None
        if left is None:
            s = right
        elif right is None:
            s = left
        else:
            s = left if r - left <= right - r else right
        chosen[t] = s
        levels[t] = level
        pool.remove(s)
        tree.decrement(s)
    req = np.asarray(requests, dtype=float)
    costs = np.abs(req - chosen)
    return MatchTrace(req, chosen, costs, float(costs.sum()), "hgreedy",
                      levels=levels)


def level_of_match(trace: MatchTrace, t: int) -> int:
    if trace.levels is None:
        raise ValueError("trace has no level data (not a hgreedy trace)")
    return int(trace.levels[t])


def run_threshold(pool: ServerPool, requests,
                  y0: float | None = None) -> MatchTrace:
    from .core import _run_greedy_core

    if y0 is None:
        y0 = len(requests) ** (-0.2)
    req = np.asarray(requests, dtype=float)
    chosen = np.array(_run_greedy_core(pool, req.tolist(), y0))
    costs = np.abs(req - chosen)
    return MatchTrace(req, chosen, costs, float(costs.sum()), "threshold")


def threshold_choice(pool: ServerPool, r: float, y0: float):
    """Single-step decision of the threshold policy on the given pool."""
    if r <= y0 and pool.zero_count > 0:
        return 0.0
    return pool.greedy_choice(r)


def check_neighboring(instance: Instance, trace: MatchTrace) -> None:
    """Verify each matched server was adjacent to its request when chosen.

    Replays the instance alongside the trace; raises ValueError on the first
    violation or on any trace/instance mismatch.
    """
    if len(trace) != len(instance.requests):
        raise ValueError("trace length does not match instance")
    pool = ServerPool(instance.servers)
    for t, r, s, _ in trace.iter_steps():
        if r != instance.requests[t]:
            raise ValueError("step %d: request mismatch" % t)
        left, right = pool.nearest_free(r)
        if s != left and s != right:
            raise ValueError(
                "step %d: matched server %r is not adjacent to request %r"
                % (t, s, r))
        pool.remove(s)


def hg_cost_level_bound(trace: MatchTrace, n_requests: int) -> bool:
    """Check cost_t <= 2^(level_t - l0) for every step of a hgreedy trace."""
    l0 = max(0, math.ceil(math.log2(n_requests)))
    bounds = np.exp2(trace.levels - l0)
    return bool(np.all(trace.costs <= bounds + 1e-12))
