"""Exact offline minimum-cost matching on the line.

Three routes with different cost/size trade-offs, cross-checked in tests:
brute force over server subsets (oracle, tiny inputs), an O(|R| * |S|)
skip-or-match dynamic program (general), and sorted rank pairing, which is
optimal when |R| == |S| and is what makes sweeps at n ~ 2^18 feasible.
"""

from itertools import combinations

import numpy as np


def opt_bruteforce(servers, requests) -> float:
    """Exact optimum by enumerating server subsets; |requests| <= 8."""
    s = sorted(float(x) for x in servers)
    r = sorted(float(x) for x in requests)
    if len(r) > 8:
        raise ValueError("brute force limited to 8 requests")
    if len(r) > len(s):
        raise ValueError("more requests than servers")
    best = float("inf")
    # an optimal matching never crosses, so only sorted pairings matter
    for chosen in combinations(s, len(r)):
        cost = sum(abs(a - b) for a, b in zip(r, chosen))
        if cost < best:
            best = cost
    return best


def opt_rank_match(servers, requests) -> float:
    """Optimal cost for the balanced case: pair i-th request with i-th server."""
    s = np.sort(np.asarray(servers, dtype=float))
    r = np.sort(np.asarray(requests, dtype=float))
    if len(s) != len(r):
        raise ValueError("rank matching needs |servers| == |requests|")
    return float(np.abs(s - r).sum())


def opt_dp(servers, requests, return_assignment: bool = False):
    """O(|R| * |S|) skip-or-match DP.

    D[i][j] = optimal cost of matching the i smallest requests within the j
    smallest servers; server j is either skipped or matched to request i.
    Returns the cost, or (cost, assignment) with assignment[t] = server
    location for the t-th request in arrival order.
    """
    s = np.sort(np.asarray(servers, dtype=float))
    r = np.asarray(requests, dtype=float)
    order = np.argsort(r, kind="stable")
    rs = r[order]
    nr, ns = len(rs), len(s)
    if nr > ns:
        raise ValueError("more requests than servers")
    if nr == 0:
        return (0.0, []) if return_assignment else 0.0

    prev = np.full(nr + 1, np.inf)
    prev[0] = 0.0
    if not return_assignment:
        for j in range(ns):
            cand = prev[:-1] + np.abs(rs - s[j])
            np.minimum(prev[1:], cand, out=prev[1:])
        cost = prev[nr]
        if not np.isfinite(cost):
            raise RuntimeError("DP produced no finite matching")
        return float(cost)

    take = np.zeros((ns, nr + 1), dtype=bool)
    for j in range(ns):
        cand = prev[:-1] + np.abs(rs - s[j])
        better = cand < prev[1:]
        take[j, 1:] = better
        prev[1:] = np.where(better, cand, prev[1:])
    cost = prev[nr]
    if not np.isfinite(cost):
        raise RuntimeError("DP produced no finite matching")
    assigned_sorted = np.empty(nr)
    i = nr
    for j in range(ns - 1, -1, -1):
        if i > 0 and take[j, i]:
            assigned_sorted[i - 1] = s[j]
            i -= 1
    assignment = np.empty(nr)
    assignment[order] = assigned_sorted
    return float(cost), assignment.tolist()
