"""Markov chain for the gap between two coupled greedy runs.

State (gamma, T): T is the free-server multiset of one greedy run, the other
run holds T + {0} - {gamma}, and gamma is the distance between the two
servers the runs disagree on (gamma = 0 means the runs have coalesced; the
chain keeps gamma = 0 forever after).  Each step draws r ~ U[0, 1], matches
it greedily in both sets, removes the chosen server of the first run from T,
and records the cost difference.  When T still holds a server at 0, gamma is
the smallest positive location and the next positive one is gamma + w, the
step falls into one of five cases by where r lands:

  1  r in [0, gamma/2]            both match 0          gamma' = gamma
  2  r in [gamma/2, (gamma+w)/2]  gamma vs 0            gamma' = 0
  3  r in [(gamma+w)/2, g+w/2]    gamma vs gamma+w      gamma' = gamma + w
  4  r in [g+w/2, gamma+w]        both match gamma+w    gamma' = gamma
  5  r in [gamma+w, 1]            both match same s     gamma' = gamma

Boundary hits classify into the lower-numbered case (left tie rule).  In
case 3 with w <= gamma the expected cost difference is at least w/2.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import ServerPool
from .seeding import rng_for_trial, trial_seed


@dataclass
class ChainState:
    gamma: float
    pool: ServerPool

    def clone(self) -> "ChainState":
        return ChainState(self.gamma, self.pool.clone())


def state_from_pool(pool: ServerPool, gamma: float | None = None) -> ChainState:
    """Initial state; gamma defaults to the smallest positive location."""
    if gamma is None:
        mp = pool.min_positive()
        gamma = 0.0 if mp is None else mp
    elif gamma != 0.0 and pool.min_positive() != gamma:
        raise ValueError("gamma must be 0 or the smallest positive location")
    return ChainState(float(gamma), pool)


@dataclass
class StepRecord:
    r: float
    s: float | None        # server removed from T
    s_prime: float | None  # server the shadow run matched
    dcost: float
    case: int              # 1..5, or 0 when the case table does not apply
    gamma_after: float


def classify_case(state: ChainState, r: float) -> int:
    """Table row for this step, or 0 when the table does not apply
    (no server at 0, dead gap, or no second positive server)."""
    g = state.gamma
    pool = state.pool
    if g == 0.0 or pool.zero_count == 0:
        return 0
    s2 = pool.succ_strict(g)
    if s2 is None:
        return 0
    w = s2 - g
    if r <= g / 2.0:
        return 1
    if r <= (g + w) / 2.0:
        return 2
    if r <= g + w / 2.0:
        return 3
    if r <= g + w:
        return 4
    return 5


def step_chain(state: ChainState, r: float) -> StepRecord:
    """Advance one step (mutates state); empty T leaves the state unchanged."""
    pool = state.pool
    if pool.free_count == 0:
        return StepRecord(r, None, None, 0.0, 0, state.gamma)
    g = state.gamma
    if g == 0.0:
        s = pool.greedy_choice(r)
        pool.remove(s)
        return StepRecord(r, s, s, 0.0, 0, 0.0)
    case = classify_case(state, r)
    left, right = pool.pred(r), pool.succ(r)
    if left is None:
        s = right
    elif right is None:
        s = left
    else:
        s = left if r - left <= right - r else right
    # neighbors of r in the shadow set T + {0} - {gamma}
    left2 = 0.0 if (left is None or left == g) else left
    if r == 0.0:
        right2 = 0.0
    elif right == g:
        right2 = pool.succ_strict(g)
    else:
        right2 = right
    if right2 is None:
        s2 = left2
    else:
        s2 = left2 if r - left2 <= right2 - r else right2
    dcost = abs(r - s2) - abs(r - s)
    pool.remove(s)
    if s == g:
        if s2 == 0.0:
            state.gamma = 0.0  # the runs coalesce
        else:
            mp = pool.min_positive()
            state.gamma = 0.0 if mp is None else mp
    return StepRecord(r, s, s2, dcost, case, state.gamma)


@dataclass
class Trajectory:
    gammas: np.ndarray        # gamma_t for t = 0..steps
    dcosts: np.ndarray
    cases: np.ndarray
    tau_zero: int | None = None   # first t with no server at 0
    tau_interval: int | None = None  # first t with T cap (0, y] empty
    tau_w: int | None = None      # first t with w > gamma or no 2nd positive
    tau_dead: int | None = None   # first t with gamma = 0
    gamma_max: float = 0.0
    stopped_at: int = 0


def _check_taus(traj: Trajectory, state: ChainState, t: int, y) -> None:
    pool = state.pool
    if traj.tau_zero is None and pool.zero_count == 0:
        traj.tau_zero = t
    mp = pool.min_positive()
    if y is not None and traj.tau_interval is None and (mp is None or mp > y):
        traj.tau_interval = t
    if traj.tau_w is None:
        above = None if mp is None else pool.succ_strict(mp)
        if mp is None or above is None or (above - mp) > mp:
            traj.tau_w = t
    if traj.tau_dead is None and state.gamma == 0.0:
        traj.tau_dead = t


def run_chain(state: ChainState, steps: int, seed: int, y: float | None = None,
              stop_at_decision: bool = False,
              stop_when_dead: bool = False) -> Trajectory:
    """Run the chain for up to `steps` requests, tracking stopping times.

    stop_at_decision stops as soon as one of tau_zero, tau_interval,
    tau_dead is set (enough to settle the front-death event);
    stop_when_dead stops once the gap has died (it can never grow again).
    """
    rng = rng_for_trial(seed, 0)
    gammas = np.empty(steps + 1)
    dcosts = np.empty(steps)
    cases = np.zeros(steps, dtype=np.int8)
    gammas[0] = state.gamma
    traj = Trajectory(gammas, dcosts, cases)
    traj.gamma_max = state.gamma
    _check_taus(traj, state, 0, y)
    t = 0
    while t < steps:
        if stop_at_decision and (traj.tau_zero is not None
                                 or traj.tau_interval is not None
                                 or traj.tau_dead is not None):
            break
        if stop_when_dead and traj.tau_dead is not None:
            break
        if state.pool.free_count == 0:
            break
        rec = step_chain(state, rng.random())
        t += 1
        gammas[t] = rec.gamma_after
        dcosts[t - 1] = rec.dcost
        cases[t - 1] = rec.case
        if rec.gamma_after > traj.gamma_max:
            traj.gamma_max = rec.gamma_after
        _check_taus(traj, state, t, y)
    traj.gammas = gammas[:t + 1]
    traj.dcosts = dcosts[:t]
    traj.cases = cases[:t]
    traj.stopped_at = t
    return traj


@dataclass
class FrontDeathEstimate:
    p_hat: float
    stderr: float
    bound: float  # x / y from the tail inequality
    trials: int
    successes: int


def estimate_front_death(pool: ServerPool, y: float, trials: int,
                         seed: int) -> FrontDeathEstimate:
    """Monte Carlo estimate of P(zeros or (0, y] deplete before the gap dies).

    Starts each trial at (x, T) with x the smallest positive location of the
    given pool; the tail inequality promises p >= x / y.
    """
    x = pool.min_positive()
    if x is None:
        raise ValueError("pool has no positive server")
    if not 0.0 < x <= y:
        raise ValueError("need 0 < x <= y")
    horizon = pool.free_count
    wins = 0
    for i in range(trials):
        st = state_from_pool(pool.clone())
        traj = run_chain(st, horizon, seed=trial_seed(seed, i), y=y,
                         stop_at_decision=True)
        t_front = min(v for v in (traj.tau_zero, traj.tau_interval)
                      if v is not None) if (traj.tau_zero is not None or
                                            traj.tau_interval is not None) \
            else None
        t_dead = traj.tau_dead
        if t_front is not None and (t_dead is None or t_front <= t_dead):
            wins += 1
    p_hat = wins / trials
    stderr = float(np.sqrt(max(p_hat * (1 - p_hat), 1e-12) / trials))
    return FrontDeathEstimate(p_hat, stderr, x / y, trials, wins)
