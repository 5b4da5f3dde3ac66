"""Core state for online matching on [0, 1].

An instance is a multiset of server locations (duplicates allowed only at 0)
plus a request arrival sequence.  ServerPool tracks the free servers during a
run and answers nearest-free queries; since servers are only ever removed,
it uses union-find jump pointers over the initial sorted array instead of a
balanced tree (amortized near-O(1) per operation).

Ties between an equally close left and right free server always go to the
left one; every policy in the package inherits this rule.
"""

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

POLICIES = ("greedy", "hgreedy", "threshold")


@dataclass
class Instance:
    """Server locations (sorted ascending) and requests in arrival order."""

    servers: np.ndarray
    requests: np.ndarray
    meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        s, r = self.servers, self.requests
        if len(s) and (s[0] < 0.0 or s[-1] > 1.0):
            raise ValueError("server location outside [0, 1]")
        if np.any(np.diff(s) < 0):
            raise ValueError("servers not sorted")
        pos = s[s > 0.0]
        if len(pos) > 1 and np.any(np.diff(pos) == 0.0):
            raise ValueError("duplicate positive server location")
        if len(r) and (r.min() < 0.0 or r.max() > 1.0):
            raise ValueError("request location outside [0, 1]")

    @property
    def n_servers(self) -> int:
        return len(self.servers)

    @property
    def n_requests(self) -> int:
        return len(self.requests)


class ServerPool:
    """Free-server multiset over [0, 1] with removal-only updates.

    Positive locations must be pairwise distinct; location 0 may carry any
    multiplicity (zero_count).  Internal index i in 1..k stands for pos[i-1];
    0 and k+1 are sentinels.  _lp[i] == i iff the positive server i is free;
    dead entries point toward their nearest free neighbor and get path
    compressed on lookup.
    """

    __slots__ = ("pos", "zero_count", "n_free_positive", "_lp", "_rp")

    def __init__(self, servers, _skip_checks=False):
        if _skip_checks:
            return
        arr = np.sort(np.asarray(servers, dtype=float))
        if len(arr) and (arr[0] < 0.0 or arr[-1] > 1.0):
            raise ValueError("server location outside [0, 1]")
        zeros = int(np.searchsorted(arr, 0.0, side="right"))
        posarr = arr[zeros:]
        if len(posarr) > 1 and np.any(np.diff(posarr) == 0.0):
            raise ValueError("duplicate positive server location")
        pos = posarr.tolist()
        k = len(pos)
        self.pos = pos
        self.zero_count = zeros
        self.n_free_positive = k
        self._lp = list(range(k + 2))
        self._rp = list(range(k + 2))

    def clone(self) -> "ServerPool":
        c = ServerPool(None, _skip_checks=True)
        c.pos = self.pos  # static, shared
        c.zero_count = self.zero_count
        c.n_free_positive = self.n_free_positive
        c._lp = self._lp.copy()
        c._rp = self._rp.copy()
        return c

    @property
    def free_count(self) -> int:
        return self.zero_count + self.n_free_positive

    def _find_left(self, i: int) -> int:
        p = self._lp
        root = i
        while p[root] != root:
            root = p[root]
        while p[i] != root:
            p[i], i = root, p[i]
        return root

    def _find_right(self, i: int) -> int:
        p = self._rp
        root = i
        while p[root] != root:
            root = p[root]
        while p[i] != root:
            p[i], i = root, p[i]
        return root

    def pred(self, r: float):
        """Largest free location <= r, or None."""
        j = self._find_left(bisect_right(self.pos, r))
        if j >= 1:
            return self.pos[j - 1]
        return 0.0 if self.zero_count > 0 else None

    def pred_strict(self, r: float):
        """Largest free location < r, or None."""
        j = self._find_left(bisect_left(self.pos, r))
        if j >= 1:
            return self.pos[j - 1]
        return 0.0 if (self.zero_count > 0 and r > 0.0) else None

    def succ(self, r: float):
        """Smallest free location >= r, or None."""
        if r <= 0.0 and self.zero_count > 0:
            return 0.0
        j = self._find_right(bisect_left(self.pos, r) + 1)
        k = len(self.pos)
        return self.pos[j - 1] if j <= k else None

    def succ_strict(self, r: float):
        """Smallest free location > r, or None."""
        if r < 0.0 and self.zero_count > 0:
            return 0.0
        j = self._find_right(bisect_right(self.pos, r) + 1)
        k = len(self.pos)
        return self.pos[j - 1] if j <= k else None

    def min_positive(self):
        j = self._find_right(1)
        return self.pos[j - 1] if j <= len(self.pos) else None

    def nearest_free(self, r: float):
        return self.pred(r), self.succ(r)

    def greedy_choice(self, r: float):
        """Closest free server to r, ties to the left; None if pool empty."""
        left, right = self.pred(r), self.succ(r)
        if left is None:
            return right
        if right is None:
            return left
        return left if r - left <= right - r else right

    def contains(self, loc: float) -> bool:
        if loc == 0.0:
            return self.zero_count > 0
        i = bisect_left(self.pos, loc)
        return i < len(self.pos) and self.pos[i] == loc and self._lp[i + 1] == i + 1

    def remove(self, loc: float) -> None:
        if loc == 0.0:
            if self.zero_count <= 0:
                raise ValueError("no free server at 0")
            self.zero_count -= 1
            return
        i = bisect_left(self.pos, loc)
        if i >= len(self.pos) or self.pos[i] != loc:
            raise ValueError("no server at location %r" % loc)
        i += 1
        if self._lp[i] != i:
            raise ValueError("server at %r already matched" % loc)
        self._lp[i] = i - 1
        self._rp[i] = i + 1
        self.n_free_positive -= 1

    def positives(self):
        """Free positive locations, ascending."""
        out = []
        k = len(self.pos)
        j = self._find_right(1)
        while j <= k:
            out.append(self.pos[j - 1])
            j = self._find_right(j + 1)
        return out

    def free_locations(self):
        return [0.0] * self.zero_count + self.positives()


@dataclass
class MatchTrace:
    """Per-step record of one online run: request, chosen server, cost."""

    requests: np.ndarray
    servers: np.ndarray
    costs: np.ndarray
    total_cost: float
    policy: str
    levels: np.ndarray | None = None  # hierarchical greedy only

    def __len__(self) -> int:
        return len(self.requests)

    def iter_steps(self):
        for t in range(len(self.requests)):
            yield t, self.requests[t], self.servers[t], self.costs[t]


def _run_greedy_core(pool: ServerPool, requests, y0: float) -> list:
    """Shared hot loop for greedy and threshold (y0 < 0 disables the
    threshold branch).  Pool internals are inlined: at n ~ 2^18 the method
    call overhead would dominate the run."""
    pos, lp, rp = pool.pos, pool._lp, pool._rp
    k = len(pos)
    zc = pool.zero_count
    nfp = pool.n_free_positive
    br = bisect_right
    chosen = []
    append = chosen.append
    for r in requests:
        if r <= y0 and zc > 0:
            zc -= 1
            append(0.0)
            continue
        b0 = br(pos, r)
        i = b0
        while lp[i] != i:
            lp[i] = lp[lp[i]]
            i = lp[i]
        j = b0 if (b0 > 0 and pos[b0 - 1] == r) else b0 + 1
        while rp[j] != j:
            rp[j] = rp[rp[j]]
            j = rp[j]
        if i:
            left = pos[i - 1]
        elif zc:
            left = 0.0
        else:
            left = None
        right = pos[j - 1] if j <= k else None
        if left is None and right is None:
            raise RuntimeError("no free server left at step %d" % len(chosen))
        if left is None:
            s, idx = right, j
        elif right is None:
            s, idx = left, i
        elif r - left <= right - r:
            s, idx = left, i
        else:
            s, idx = right, j
        if idx == 0:
            zc -= 1
        else:
            lp[idx] = idx - 1
            rp[idx] = idx + 1
            nfp -= 1
        append(s)
    pool.zero_count = zc
    pool.n_free_positive = nfp
    return chosen


def run_greedy(pool: ServerPool, requests) -> MatchTrace:
    """Run plain greedy on the given pool (mutates it)."""
    req = np.asarray(requests, dtype=float)
    chosen = np.array(_run_greedy_core(pool, req.tolist(), -1.0))
    costs = np.abs(req - chosen)
    return MatchTrace(req, chosen, costs, float(costs.sum()), "greedy")


def run_policy(instance: Instance, policy: str, seed: int = 0,
               y0: float | None = None) -> MatchTrace:
    """Run one online policy on an instance and return its trace.

    seed is accepted for interface uniformity; all shipped policies are
    deterministic.  y0 only applies to the threshold policy and defaults to
    n^(-1/5) with n the number of requests.
    """
    if policy not in POLICIES:
        raise ValueError("unknown policy %r" % policy)
    pool = ServerPool(instance.servers)
    if policy == "greedy":
        return run_greedy(pool, instance.requests)
    from . import algorithms

    if policy == "hgreedy":
        return algorithms.run_hierarchical_greedy(pool, instance.requests)
    return algorithms.run_threshold(pool, instance.requests, y0=y0)
