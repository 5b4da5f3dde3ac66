"""Coupled execution of the hybrid algorithms H^m and H^(m-1).

H^m follows policy A for the first m requests and greedy afterwards.  Run
side by side on the same request sequence, the free-server sets of H^m and
H^(m-1) differ in at most one server each; we call them the markers
gL < gR, write delta = gR - gL, and no free server of either run lies
strictly between them.  Each greedy-phase step moves the markers according
to a fixed case table keyed on where the request lands relative to gL, gR
and the nearest common free servers sL (left of gL) and sR (right of gR);
the per-step cost difference is bounded row by row, and once delta hits 0
the two runs have coalesced for good.

verify_structure replays a recorded trace against that table.  Servers at 0
may be shared by both runs; a common zero sitting at a marker is treated as
sL = 0 with dL = 0, which reduces the table to the gap-chain specialization.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .algorithms import threshold_choice
from .core import Instance, ServerPool
from .gapchain import ChainState, run_chain, state_from_pool
from .seeding import trial_seed


@dataclass
class StepInfo:
    t: int            # 1-based index of the request being matched
    r: float
    s_p: float        # choice of H^m
    s_q: float        # choice of H^(m-1)
    gl: float | None  # markers before the step (None = sets equal)
    gr: float | None
    sl: float | None  # nearest common free servers before the step
    sr: float | None
    p_holds_gl: bool  # True if H^m's pool held gL
    gl_after: float | None
    gr_after: float | None
    between_ok: bool


@dataclass
class HybridTrace:
    n: int
    m: int
    policy: str
    cost_hm: float
    cost_hm1: float
    deltas: np.ndarray            # delta_t for t = m..n
    chosen_hm: np.ndarray         # server chosen by H^m at each step
    free_at_m: list = field(default_factory=list)  # snapshot of S_m
    records: list = field(default_factory=list)    # StepInfo, t > m
    violations: list = field(default_factory=list)

    @property
    def max_delta(self) -> float:
        return float(self.deltas.max()) if len(self.deltas) else 0.0


def _choice_of(pool, policy, r, y0):
    if policy == "greedy":
        return pool.greedy_choice(r)
    if policy == "threshold":
        return threshold_choice(pool, r, y0)
    raise ValueError("policy %r cannot drive a hybrid run" % policy)


def run_hybrid_pair(instance: Instance, m: int, policy_a: str = "threshold",
                    y0: float | None = None, requests=None,
                    record: bool = True) -> HybridTrace:
    """Run H^m and H^(m-1) with shared randomness and track the markers.

    policy A must make neighboring matches; this is asserted during the A
    phase.  With record=False only the delta series, costs, the S_m
    snapshot and H^m's removal sequence are kept.
    """
    req = instance.requests if requests is None else np.asarray(requests)
    n = len(req)
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    if y0 is None:
        y0 = n ** (-0.2)
    pool_p = ServerPool(instance.servers)  # H^m
    pool_q = pool_p.clone()                # H^(m-1)
    cost_p = cost_q = 0.0
    chosen_p = np.empty(n)
    only_p = only_q = None  # the one server unique to each pool, if any
    deltas = np.empty(n - m + 1)
    records: list = []
    violations: list = []
    free_at_m: list = []

    for t in range(1, n + 1):
        r = req[t - 1]
        if t < m:
            s = _choice_of(pool_p, policy_a, r, y0)
            if s is None:
                raise RuntimeError("no free server left at step %d" % t)
            left, right = pool_p.nearest_free(r)
            if s != left and s != right:
                raise ValueError(
                    "policy %r made a non-neighboring match at step %d"
                    % (policy_a, t))
            sp = sq = s
        elif t == m:
            sp = _choice_of(pool_p, policy_a, r, y0)
            left, right = pool_p.nearest_free(r)
            if sp != left and sp != right:
                raise ValueError(
                    "policy %r made a non-neighboring match at step %d"
                    % (policy_a, t))
            sq = pool_q.greedy_choice(r)
        else:
            sp = pool_p.greedy_choice(r)
            sq = pool_q.greedy_choice(r)
        if sp is None or sq is None:
            raise RuntimeError("no free server left at step %d" % t)

        info = None
        if record and t > m:
            info = _pre_step_info(t, r, sp, sq, only_p, only_q,
                                  pool_p, pool_q)

        # update the symmetric difference of the two pools
        if sp != sq:
            p_hit = only_p is not None and sp == only_p
            q_hit = only_q is not None and sq == only_q
            if only_p is None:
                only_p, only_q = sq, sp  # the split step
            elif p_hit and q_hit:
                only_p = only_q = None
            elif p_hit:
                only_p, only_q = sq, only_q
            elif q_hit:
                only_q = sp
            else:
                violations.append(
                    "step %d: symmetric difference grew past one server" % t)
                only_p, only_q = sq, sp  # keep going with the latest pair

        pool_p.remove(sp)
        pool_q.remove(sq)
        cost_p += abs(r - sp)
        cost_q += abs(r - sq)
        chosen_p[t - 1] = sp

        if info is not None:
            if only_p is None:
                info.gl_after = info.gr_after = None
            else:
                info.gl_after = min(only_p, only_q)
                info.gr_after = max(only_p, only_q)
            records.append(info)
        if t == m:
            free_at_m = pool_p.free_locations()
        if t >= m:
            deltas[t - m] = abs(only_q - only_p) if only_p is not None else 0.0

    return HybridTrace(n, m, policy_a, cost_p, cost_q, deltas, chosen_p,
                       free_at_m, records, violations)


def _pre_step_info(t, r, sp, sq, only_p, only_q, pool_p, pool_q):
    if only_p is None:
        return StepInfo(t, r, sp, sq, None, None, None, None, True,
                        None, None, True)
    gl = min(only_p, only_q)
    gr = max(only_p, only_q)
    p_holds_gl = only_p == gl
    table_pool = pool_p if p_holds_gl else pool_q
    other_pool = pool_q if p_holds_gl else pool_p
    # nearest common free servers around the marker pair; a zero shared by
    # both pools while gL itself is 0 counts as sL = 0 (dL = 0)
    if gl == 0.0:
        sl = 0.0 if table_pool.zero_count >= 2 else None
    else:
        sl = table_pool.pred_strict(gl)
    sr = table_pool.succ(gr)
    between_l = table_pool.succ_strict(gl)
    between_r = other_pool.pred_strict(gr)
    between_ok = ((between_l is None or between_l >= gr)
                  and (between_r is None or between_r <= gl))
    return StepInfo(t, r, sp, sq, gl, gr, sl, sr, p_holds_gl,
                    None, None, between_ok)


def verify_structure(trace: HybridTrace) -> dict:
    """Check a recorded hybrid trace against the marker case table.

    Returns a report with per-row counts and a list of violations; the trace
    passes when both the report's violations and the trace's own runtime
    violations are empty.
    """
    counts: dict = {}
    violations = list(trace.violations)

    def bad(info, msg):
        violations.append("step %d: %s" % (info.t, msg))

    for info in trace.records:
        if info.gl is None:
            if info.s_p != info.s_q:
                bad(info, "equal sets but different choices")
            continue
        if not info.between_ok:
            bad(info, "free server strictly between the markers")
        gl, gr, sl, sr = info.gl, info.gr, info.sl, info.sr
        delta = gr - gl
        # choices seen from the table's point of view (side holding gL)
        s_tab = info.s_p if info.p_holds_gl else info.s_q
        s_oth = info.s_q if info.p_holds_gl else info.s_p
        dcost = abs(abs(info.r - s_tab) - abs(info.r - s_oth))
        r = info.r
        dl = None if sl is None else gl - sl
        dr = None if sr is None else sr - gr

        if sl is not None and sr is not None:
            x = r - sl
            if x < 0 or r > sr:
                row, want, after, bound = "2.6", (s_oth, s_oth), "same", 0.0
                if s_tab != s_oth:
                    bad(info, "row 2.6 expects identical choices")
                want = None
            elif x <= dl / 2:
                row, want, after, bound = "2.1", (sl, sl), "same", 0.0
            elif x <= (dl + delta) / 2:
                row, want, after, bound = "2.2", (gl, sl), (sl, gr), dl
            elif x <= dl + (dr + delta) / 2:
                row, want, after, bound = "2.3", (gl, gr), "dead", delta
            elif x <= dl + delta + dr / 2:
                row, want, after, bound = "2.4", (sr, gr), (gl, sr), dr
            else:
                row, want, after, bound = "2.5", (sr, sr), "same", 0.0
        elif sl is None and sr is not None:
            if r <= gl + (dr + delta) / 2:
                row, want, after, bound = "3.1", (gl, gr), "dead", delta
            elif r <= gl + delta + dr / 2:
                row, want, after, bound = "3.2", (sr, gr), (gl, sr), dr
            elif r <= gl + delta + dr:
                row, want, after, bound = "3.3", (sr, sr), "same", 0.0
            else:
                row, want, after, bound = "3.4", (s_oth, s_oth), "same", 0.0
                if s_tab != s_oth:
                    bad(info, "row 3.4 expects identical choices")
                want = None
        elif sl is not None and sr is None:
            if r < sl:
                row, want, after, bound = "4.1", (s_oth, s_oth), "same", 0.0
                if s_tab != s_oth:
                    bad(info, "row 4.1 expects identical choices")
                want = None
            elif r - sl <= dl / 2:
                row, want, after, bound = "4.2", (sl, sl), "same", 0.0
            elif r <= gr - (dl + delta) / 2:
                row, want, after, bound = "4.3", (gl, sl), (sl, gr), dl
            else:
                row, want, after, bound = "4.4", (gl, gr), "dead", delta
        else:
            row, want, after, bound = "lone", (gl, gr), "dead", delta

        counts[row] = counts.get(row, 0) + 1
        if want is not None and (s_tab != want[0] or s_oth != want[1]):
            bad(info, "row %s predicted choices (%r, %r), got (%r, %r)"
                % (row, want[0], want[1], s_tab, s_oth))
        if after == "same":
            ok = info.gl_after == gl and info.gr_after == gr
        elif after == "dead":
            ok = info.gl_after is None
        else:
            ok = info.gl_after == after[0] and info.gr_after == after[1]
        if not ok:
            bad(info, "row %s predicted markers %r, got (%r, %r)"
                % (row, after, info.gl_after, info.gr_after))
        if dcost > bound + 1e-12:
            bad(info, "row %s cost difference %.3g exceeds bound %.3g"
                % (row, dcost, bound))

    return {"checked": len(trace.records), "case_counts": counts,
            "violations": violations, "ok": not violations}


def gap_series(trace: HybridTrace):
    """(t, delta_t) for t = m..n."""
    ts = np.arange(trace.m, trace.n + 1)
    return ts, trace.deltas


def delta_at_split(instance: Instance, m: int, policy_a: str = "threshold",
                   y0: float | None = None):
    """delta_m and r_m without running the full pair.

    Runs policy A for m-1 steps, then compares A's choice for r_m with the
    greedy choice; delta_m is the distance between them (0 if they agree).
    """
    req = instance.requests
    n = len(req)
    if y0 is None:
        y0 = n ** (-0.2)
    pool = ServerPool(instance.servers)
    for t in range(m - 1):
        s = _choice_of(pool, policy_a, req[t], y0)
        if s is None:
            raise RuntimeError("no free server left at step %d" % (t + 1))
        pool.remove(s)
    r_m = req[m - 1]
    s_a = _choice_of(pool, policy_a, r_m, y0)
    s_g = pool.greedy_choice(r_m)
    return abs(s_a - s_g), r_m


def estimate_worstcase_bound(pool: ServerPool, y: float, trials: int,
                             seed: int) -> dict:
    """Monte Carlo check of the gap tail bound P(max delta >= y) <= x/y.

    Starts the gap chain at (x, S) with x the smallest positive location of
    the pool and tracks the running maximum of the gap until it dies or the
    pool empties.
    """
    x = pool.min_positive()
    if x is None:
        raise ValueError("pool has no positive server")
    if not 0.0 < x <= y:
        raise ValueError("need 0 < x <= y")
    horizon = pool.free_count
    hits = 0
    for i in range(trials):
        st = state_from_pool(pool.clone())
        rng_seed = trial_seed(seed, i)
        traj = run_chain(st, horizon, seed=rng_seed, stop_when_dead=True)
        if traj.gamma_max >= y:
            hits += 1
    p_hat = hits / trials
    stderr = math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / trials)
    return {"x": x, "y": y, "p_hat": p_hat, "stderr": stderr,
            "bound": x / y, "trials": trials, "hits": hits}
