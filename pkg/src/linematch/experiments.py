"""Experiment sweeps, regressions, and structural checkers.

Everything here is deterministic given the master seed: trial i of any sweep
uses the mixed seed from seeding.py, so splitting trials across workers
(LINEMATCH_THREADS) cannot change the numbers.

Constants follow the hard-instance analysis with a slack parameter eps_hat
(default 0.01): c3 = 4/5 + eps_hat, c1 = (2/9)(1 - eps_hat),
c2 = (2/3)((1 + eps_hat) + (1/9)(1 - eps_hat)), d1 = (1 - c3)/ln(1/(1 - c2)).
All logs are natural.
"""

import heapq
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import instances, offline
from .core import Instance, run_policy
from .seeding import rng_for_trial

EPS_HAT = 0.01
DP_CELL_CAP = 1 << 24  # above this |R|*|S|, unbalanced OPT is not computed


def constants(n: int, eps_hat: float = EPS_HAT) -> dict:
    c3 = 0.8 + eps_hat
    c1 = (2.0 / 9.0) * (1.0 - eps_hat)
    c2 = (2.0 / 3.0) * ((1.0 + eps_hat) + (1.0 / 9.0) * (1.0 - eps_hat))
    d1 = (1.0 - c3) / math.log(1.0 / (1.0 - c2))
    return {
        "eps_hat": eps_hat, "c1": c1, "c2": c2, "c3": c3, "d1": d1,
        "y0": n ** (-0.2), "m": math.floor(c1 * n),
        "horizon": math.floor(n - n ** c3),
        "n_intervals": max(0, math.floor(d1 * math.log(n))),
    }


@dataclass
class IntervalLadder:
    """Geometric interval ladder (y_{i-1}, y_i] with y_i = 1.5^i * n^(-1/5)."""

    n: int
    y0: float
    ys: list        # y_0 .. y_K
    intervals: list  # (lo, hi] pairs, I_1 .. I_K

    @classmethod
    def for_n(cls, n: int, eps_hat: float = EPS_HAT) -> "IntervalLadder":
        c = constants(n, eps_hat)
        y0 = c["y0"]
        k = c["n_intervals"]
        ys = [y0]
        while len(ys) <= k and ys[-1] * 1.5 <= 1.0:
            ys.append(ys[-1] * 1.5)
        ivals = [(ys[i - 1], ys[i]) for i in range(1, len(ys))]
        return cls(n, y0, ys, ivals)


def depletion_times(instance: Instance, chosen, ladder: IntervalLadder) -> dict:
    """First times the zero block and each ladder interval run dry.

    chosen is the per-step matched-server array of a run on the instance.
    Times are 1-based step indices; None if the interval never empties.
    """
    chosen = np.asarray(chosen)
    servers = np.asarray(instance.servers)

    def first_empty(mask_servers, mask_chosen):
        c0 = int(np.count_nonzero(mask_servers))
        if c0 == 0:
            return 0
        idx = np.flatnonzero(mask_chosen)
        return int(idx[c0 - 1]) + 1 if len(idx) >= c0 else None

    out = {"t_zero": first_empty(servers == 0.0, chosen == 0.0),
           "t_intervals": []}
    for lo, hi in ladder.intervals:
        out["t_intervals"].append(
            first_empty((servers > lo) & (servers <= hi),
                        (chosen > lo) & (chosen <= hi)))
    return out


def gap_bound_check(instance: Instance, chosen, eps_hat: float = EPS_HAT) -> dict:
    """Check consecutive free positive-server gaps stay small early on.

    Replays the removal sequence and tracks the maximum gap between adjacent
    free positive servers for t <= n - n^c3; the bound is
    2 ln(n)^4 n^(1 - 2 c3).
    """
    n = len(instance.requests)
    c = constants(n, eps_hat)
    bound = 2.0 * math.log(n) ** 4 * n ** (1.0 - 2.0 * c["c3"])
    pos = [float(s) for s in instance.servers if s > 0.0]
    k = len(pos)
    index = {p: i for i, p in enumerate(pos)}
    left = list(range(-1, k - 1))
    right = list(range(1, k + 1))
    alive = [True] * k
    heap = [(-(pos[i + 1] - pos[i]), i, i + 1) for i in range(k - 1)]
    heapq.heapify(heap)

    def current_max():
        while heap:
            g, i, j = heap[0]
            if alive[i] and alive[j] and right[i] == j:
                return -g
            heapq.heappop(heap)
        return 0.0

    horizon = c["horizon"]
    max_gap = current_max()
    violations = 0
    if max_gap > bound:
        violations += 1
    for t, s in enumerate(np.asarray(chosen)[:horizon], start=1):
        if s > 0.0:
            i = index[float(s)]
            alive[i] = False
            a, b = left[i], right[i]
            if a >= 0:
                right[a] = b
            if b < k:
                left[b] = a
            if 0 <= a and b < k:
                heapq.heappush(heap, (-(pos[b] - pos[a]), a, b))
            g = current_max()
            if g > max_gap:
                max_gap = g
            if g > bound:
                violations += 1
    return {"bound": bound, "max_gap": max_gap, "violations": violations,
            "horizon": horizon, "ok": violations == 0}


class GridCounter:
    """Request counts over (time window) x (location interval) rectangles."""

    def __init__(self, requests):
        self.requests = np.asarray(requests, dtype=float)

    def count(self, t0: int, t1: int, lo: float, hi: float,
              closed_lo: bool = True) -> int:
        """Requests with index in (t0, t1] (1-based) landing in [lo, hi]
        (or (lo, hi] with closed_lo=False)."""
        window = self.requests[t0:t1]
        if closed_lo:
            return int(np.count_nonzero((window >= lo) & (window <= hi)))
        return int(np.count_nonzero((window > lo) & (window <= hi)))


def check_regular(requests, n: int | None = None, mode: str = "full",
                  rects=None, eps_hat: float = EPS_HAT) -> dict:
    """Density regularity of a request sequence against the uniform rate.

    For a window of dt steps and an interval of width dx the request count
    must be at least dx*dt - ln(n)^2 sqrt(dx*dt), and at most
    dx*dt + ln(n)^2 sqrt(dx*dt) whenever dx*dt >= 1.

    full mode checks every grid rectangle (d, d' in {i/n}, all windows);
    O(n^4), keep n <= 200.  targeted mode checks only the rectangles
    passed in (list of (t0, t1, lo, hi) with 1-based windows (t0, t1]).
    """
    req = np.asarray(requests, dtype=float)
    big_t = len(req)
    if n is None:
        n = big_t
    lam = math.log(n) ** 2
    tol = 1e-9
    violations = []

    if mode == "targeted":
        gc = GridCounter(req)
        for (t0, t1, lo, hi) in rects or []:
            dt = t1 - t0
            dx = hi - lo
            if dt <= 0 or dx <= 0:
                continue
            cnt = gc.count(t0, t1, lo, hi)
            area = dx * dt
            slack = lam * math.sqrt(area)
            if cnt < area - slack - tol:
                violations.append(("low", t0, t1, lo, hi, cnt, area))
            if area >= 1.0 and cnt > area + slack + tol:
                violations.append(("high", t0, t1, lo, hi, cnt, area))
        return {"mode": mode, "violations": violations,
                "ok": not violations}

    if mode != "full":
        raise ValueError("mode must be 'full' or 'targeted'")
    if n > 200:
        raise ValueError("full mode is O(n^4); use targeted above n=200")
    # cell k = ((k-1)/n, k/n]; exact grid hits tracked separately so that
    # the closed lower endpoint [d, d'] counts them
    cells = np.minimum(np.ceil(req * n).astype(int), n)
    cells[req <= 0.0] = 0
    exact = np.where(np.abs(req * n - np.round(req * n)) == 0.0,
                     np.round(req * n).astype(int), -1)
    time_pref = np.zeros((big_t + 1, n + 1), dtype=np.int64)
    exact_pref = np.zeros((big_t + 1, n + 1), dtype=np.int64)
    for j in range(big_t):
        time_pref[j + 1] = time_pref[j]
        exact_pref[j + 1] = exact_pref[j]
        if cells[j] >= 1:
            time_pref[j + 1, cells[j]] += 1
        else:
            exact_pref[j + 1, 0] += 1  # request exactly at 0
        if exact[j] >= 1:
            exact_pref[j + 1, exact[j]] += 1
    grid = np.arange(n + 1) / n
    dd = np.subtract.outer(grid, grid) * -1.0  # dd[a, b] = (b - a)/n
    for t0 in range(big_t):
        for t1 in range(t0 + 1, big_t + 1):
            w = time_pref[t1] - time_pref[t0]
            we = exact_pref[t1] - exact_pref[t0]
            s = np.cumsum(w)  # s[k] = requests in cells 1..k of this window
            cnt = -np.subtract.outer(s, s) + we[:, None]
            dt = t1 - t0
            area = dd * dt
            with np.errstate(invalid="ignore"):
                slack = lam * np.sqrt(np.maximum(area, 0.0))
            low = (area > 0) & (cnt < area - slack - tol)
            high = (area >= 1.0) & (cnt > area + slack + tol)
            if low.any() or high.any():
                for a, b in zip(*np.nonzero(low | high)):
                    if b > a:
                        kind = "low" if low[a, b] else "high"
                        violations.append((kind, t0, t1, grid[a], grid[b],
                                           int(cnt[a, b]), float(area[a, b])))
                if len(violations) > 20:
                    return {"mode": mode, "violations": violations,
                            "ok": False}
    violations = [v for v in violations]
    return {"mode": mode, "violations": violations, "ok": not violations}


def targeted_rectangles(n: int, ladder: IntervalLadder, times) -> list:
    """Proof-relevant rectangles: ladder intervals, the strips
    [3/4 y_{i-1}, y_{i-1}], and [0, y_2] if present, crossed with windows
    between consecutive time anchors."""
    anchors = sorted({0, *[t for t in times if t is not None]})
    ivals = list(ladder.intervals)
    ivals += [(0.75 * y, y) for y in ladder.ys[:-1]]
    if len(ladder.ys) > 2:
        ivals.append((0.0, ladder.ys[2]))
    rects = []
    for i in range(len(anchors) - 1):
        for j in range(i + 1, len(anchors)):
            for lo, hi in ivals:
                rects.append((anchors[i], anchors[j], lo, hi))
    return rects


def interval_counts(instance: Instance, ladder: IntervalLadder) -> list:
    """Initial server and request counts per ladder interval."""
    s = np.asarray(instance.servers)
    r = np.asarray(instance.requests)
    out = []
    for lo, hi in ladder.intervals:
        out.append({"lo": lo, "hi": hi,
                    "servers": int(np.count_nonzero((s > lo) & (s <= hi))),
                    "requests": int(np.count_nonzero((r > lo) & (r <= hi)))})
    return out


def regression_loglog(ns, ys):
    """Least-squares slope/intercept/R^2 of ln(y) against ln(n)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    fit = slope * x + intercept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def linear_slope(xs, ys):
    """Plain least-squares slope of y against x (no logs)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    return float(np.polyfit(x, y, 1)[0])


def pava_increasing(ys):
    """Pool-adjacent-violators fit: closest nondecreasing sequence."""
    blocks = [[float(v), 1.0] for v in ys]
    out = []
    for b in blocks:
        out.append(b)
        while len(out) > 1 and out[-2][0] > out[-1][0]:
            v2, w2 = out.pop()
            v1, w1 = out.pop()
            out.append([(v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2])
    fit = []
    for v, w in out:
        fit.extend([v] * int(w))
    return np.array(fit)


@dataclass
class SweepRow:
    model: str
    algo: str
    n: int
    trials: int
    mean_cost: float
    std_cost: float
    mean_opt: float
    ratio: float
    seed: int
    skipped: bool = False


def _opt_cost(inst: Instance) -> float:
    if len(inst.servers) == len(inst.requests):
        return offline.opt_rank_match(inst.servers, inst.requests)
    if len(inst.servers) * len(inst.requests) <= DP_CELL_CAP:
        return offline.opt_dp(inst.servers, inst.requests)
    return float("nan")


def _sweep_trial(args):
    model, algo, n, seed, trial, params, with_opt = args
    inst = instances.generate_trial(model, n, seed, trial, **params)
    trace = run_policy(inst, algo, y0=params.get("y0"))
    opt = _opt_cost(inst) if with_opt else float("nan")
    return trace.total_cost, opt


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("LINEMATCH_THREADS", "1")))
    except ValueError:
        return 1


def _map_trials(fn, items):
    workers = worker_count()
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def scaling_sweep(model: str, algo: str, n_list, trials: int, seed: int,
                  params: dict | None = None, with_opt: bool = True) -> list:
    """Mean online cost and optimum across a grid of n; one SweepRow per n.

    Infeasible cells (e.g. lower/faithful below its minimum n) come back as
    skipped rows instead of failing the whole sweep.
    """
    params = dict(params or {})
    rows = []
    for n in n_list:
        try:
            instances.generate(model, n, 0, **params)
        except ValueError:
            rows.append(SweepRow(model, algo, n, 0, float("nan"),
                                 float("nan"), float("nan"), float("nan"),
                                 seed, skipped=True))
            continue
        items = [(model, algo, n, seed, t, params, with_opt)
                 for t in range(trials)]
        results = _map_trials(_sweep_trial, items)
        costs = np.array([c for c, _ in results])
        opts = np.array([o for _, o in results])
        mean_cost = float(costs.mean())
        mean_opt = float(opts.mean())
        ratio = mean_cost / mean_opt if mean_opt > 0 else float("nan")
        rows.append(SweepRow(model, algo, n, trials, mean_cost,
                             float(costs.std()), mean_opt, ratio, seed))
    return rows


def _profile_trial(args):
    n, eps, seed, trial = args
    inst = instances.generate_trial("excess", n, seed, trial, eps=eps)
    trace = run_policy(inst, "greedy")
    return trace.total_cost, float(trace.costs[-1])


def per_step_cost_profile(n_list, trials: int, seed: int,
                          eps: float = 0.2) -> list:
    """Greedy on the excess model: mean total cost (expected O(1) in n) and
    the mean cost of the final arrival scaled by n (expected O(1) too)."""
    rows = []
    for n in n_list:
        items = [(n, eps, seed, t) for t in range(trials)]
        results = _map_trials(_profile_trial, items)
        totals = np.array([a for a, _ in results])
        lasts = np.array([b for _, b in results])
        rows.append({"n": n, "trials": trials,
                     "mean_total": float(totals.mean()),
                     "std_total": float(totals.std()),
                     "mean_last": float(lasts.mean()),
                     "n_mean_last": float(n * lasts.mean())})
    return rows


def grid_density_check(n: int, mode: str = "faithful", kappa: float = 1.0,
                       trials: int = 100, seed: int = 0) -> dict:
    """Check the hard instance's grid density: for random subintervals
    I of [n^(-1/5), 1], the server count lies in [q|I| - 1, q|I| + 3]
    with q the grid rate."""
    z, grid, y0, ntilde = instances.lower_bound_layout(n, mode, kappa)
    rng = rng_for_trial(seed, 0)
    bad = []
    for _ in range(trials):
        a, b = np.sort(rng.uniform(y0, 1.0, size=2))
        cnt = int(np.searchsorted(grid, b, side="right")
                  - np.searchsorted(grid, a, side="left"))
        lo = ntilde * (b - a) - 1.0
        hi = ntilde * (b - a) + 3.0
        if not lo <= cnt <= hi:
            bad.append((float(a), float(b), cnt, lo, hi))
    return {"trials": trials, "violations": bad, "ok": not bad}
