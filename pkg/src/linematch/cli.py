"""Command line interface.

Subcommands: gen (write an instance file), run (one policy on one instance),
scale (sweep over n), hybrid (coupled H^m / H^(m-1) runs plus structure
verification), gap (gap-chain trials), verify (self-check battery).

Exit codes: 0 success, 1 a verification/check failed, 2 usage error.
Outputs are deterministic for a fixed seed regardless of LINEMATCH_THREADS.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import __version__, algorithms, experiments, gapchain, hybrid, instances, offline
from .core import POLICIES, ServerPool, run_policy
from .seeding import trial_seed


def _meta_lines(cmd: str, seed) -> list:
    return ["# linematch %s cmd=%s seed=%s rng=pcg64+splitmix64 eps_hat=%s"
            % (__version__, cmd, seed, experiments.EPS_HAT)]


def _write_lines(path, lines):
    text = "\n".join(lines) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def cmd_gen(args) -> int:
    params = {}
    if args.model == "excess":
        params["eps"] = args.eps
    if args.model == "lower":
        params["mode"] = args.mode
        params["kappa"] = args.kappa
    inst = instances.generate(args.model, args.n, args.seed, **params)
    instances.write_instance(args.output, inst)
    return 0


def cmd_run(args) -> int:
    inst = instances.read_instance(args.instance)
    trace = run_policy(inst, args.algo, y0=args.y0)
    if args.check_neighboring:
        algorithms.check_neighboring(inst, trace)
    lines = _meta_lines("run", inst.meta.get("seed"))
    lines.append("# instance=%s algo=%s" % (args.instance, args.algo))
    lines.append("t,r,s,cost")
    for t, r, s, c in trace.iter_steps():
        lines.append("%d,%s,%s,%s" % (t + 1, _fmt(float(r)),
                                      _fmt(float(s)), _fmt(float(c))))
    lines.append("total,%s" % _fmt(trace.total_cost))
    if args.opt:
        lines.append("opt,%s" % _fmt(experiments._opt_cost(inst)))
    _write_lines(args.output, lines)
    return 0


def _parse_ns(spec: str) -> list:
    return [int(x) for x in spec.split(",") if x]


def cmd_scale(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
        models = cfg.get("models") or [cfg["model"]]
        algos = cfg.get("algos") or [cfg.get("algo", "greedy")]
        n_list = cfg["n_list"]
        trials = cfg.get("trials", 50)
        seed = cfg.get("seed", 0)
        params = {k: cfg[k] for k in ("eps", "mode", "kappa", "y0")
                  if k in cfg}
        with_opt = not cfg.get("no_opt", False)
    else:
        if not args.model or not args.ns:
            raise ValueError("need --config or (--model and --ns)")
        models, algos = [args.model], [args.algo]
        n_list = _parse_ns(args.ns)
        trials, seed = args.trials, args.seed
        params = {}
        if args.model == "excess":
            params["eps"] = args.eps
        if args.model == "lower":
            params["mode"] = args.mode
            params["kappa"] = args.kappa
        if args.y0 is not None:
            params["y0"] = args.y0
        with_opt = not args.no_opt

    rows = []
    for model in models:
        for algo in algos:
            rows.extend(experiments.scaling_sweep(
                model, algo, n_list, trials, seed, params, with_opt=with_opt))
    lines = _meta_lines("scale", seed)
    lines.append("# trials=%d constants=%s"
                 % (trials, json.dumps(experiments.constants(max(n_list)),
                                       sort_keys=True)))
    lines.append("model,algo,n,trials,mean_cost,std_cost,mean_opt,ratio,skipped")
    for r in rows:
        lines.append(",".join([r.model, r.algo, str(r.n), str(r.trials),
                               _fmt(r.mean_cost), _fmt(r.std_cost),
                               _fmt(r.mean_opt), _fmt(r.ratio),
                               str(int(r.skipped))]))
    _write_lines(args.output, lines)
    if args.dat:
        dat = ["# n mean_cost mean_opt ratio  (%s)" %
               " ".join("%s/%s" % (r.model, r.algo) for r in rows[:1])]
        for r in rows:
            dat.append("%d %s %s %s" % (r.n, _fmt(r.mean_cost),
                                        _fmt(r.mean_opt), _fmt(r.ratio)))
        _write_lines(args.dat, dat)
    return 0


def cmd_hybrid(args) -> int:
    report = {"n": args.n, "m": args.m, "policy": args.policy,
              "trials": args.trials, "seed": args.seed, "runs": []}
    failed = False
    for i in range(args.trials):
        inst = instances.generate_trial(args.model, args.n, args.seed, i,
                                        **({"mode": args.mode}
                                           if args.model == "lower" else {}))
        if args.m:
            m = args.m
        else:  # fresh random split point per trial
            m = 1 + trial_seed(args.seed, 10 ** 6 + i) % args.n
        tr = hybrid.run_hybrid_pair(inst, m, policy_a=args.policy,
                                    y0=args.y0)
        rep = hybrid.verify_structure(tr)
        bound_ok = bool((tr.cost_hm1 - tr.cost_hm)
                        <= 2.0 * tr.max_delta + 1e-9)
        if not rep["ok"] or not bound_ok:
            failed = True
        report["runs"].append({
            "trial": i, "m": m, "cost_hm": tr.cost_hm, "cost_hm1": tr.cost_hm1,
            "max_delta": tr.max_delta, "delta_m": float(tr.deltas[0]),
            "structure_ok": rep["ok"], "cost_bound_ok": bound_ok,
            "case_counts": rep["case_counts"],
            "violations": rep["violations"][:5]})
    report["ok"] = not failed
    text = json.dumps(report, indent=2, sort_keys=True)
    _write_lines(args.output, [line for line in
                               _meta_lines("hybrid", args.seed)] + [text])
    return 0 if not failed else 1


def cmd_gap(args) -> int:
    inst = instances.read_instance(args.instance)
    base = ServerPool(inst.servers)
    lines = _meta_lines("gap", args.seed)
    lines.append("trial,steps,gamma0,gamma_max,sum_dcost,"
                 "tau_zero,tau_interval,tau_w,tau_dead")
    for i in range(args.trials):
        st = gapchain.state_from_pool(base.clone())
        steps = args.steps if args.steps else base.free_count
        traj = gapchain.run_chain(st, steps, seed=trial_seed(args.seed, i),
                                  y=args.y)
        lines.append(",".join([
            str(i), str(traj.stopped_at), _fmt(float(traj.gammas[0])),
            _fmt(traj.gamma_max), _fmt(float(traj.dcosts.sum())),
            str(traj.tau_zero), str(traj.tau_interval), str(traj.tau_w),
            str(traj.tau_dead)]))
    if args.y is not None and args.front_death:
        est = gapchain.estimate_front_death(base, args.y, args.trials,
                                            args.seed)
        lines.append("# front_death p_hat=%s bound=%s stderr=%s"
                     % (_fmt(est.p_hat), _fmt(est.bound), _fmt(est.stderr)))
    _write_lines(args.output, lines)
    return 0


def cmd_verify(args) -> int:
    failures = []
    selected = [name for name, on in (("oracle", args.oracle),
                                      ("neighboring", args.neighboring),
                                      ("structure", args.structure),
                                      ("chain", args.chain)) if on]
    if not selected:
        selected = ["oracle", "neighboring", "structure", "chain"]

    def check(name, ok, detail=""):
        print("%s %s%s" % ("PASS" if ok else "FAIL", name,
                           " (%s)" % detail if detail and not ok else ""))
        if not ok:
            failures.append(name)

    if "oracle" in selected:
        # offline optimum agrees across its three routes
        rng = np.random.default_rng(trial_seed(args.seed, 1))
        bad = None
        for _ in range(args.cases):
            ns = int(rng.integers(1, 10))
            nr = int(rng.integers(1, min(ns, 7) + 1))
            s, r = rng.random(ns), rng.random(nr)
            bf = offline.opt_bruteforce(s, r)
            dp = offline.opt_dp(s, r)
            if abs(bf - dp) > 1e-9:
                bad = "dp=%r bf=%r S=%r R=%r" % (dp, bf, s, r)
                break
            if ns == nr and abs(offline.opt_rank_match(s, r) - bf) > 1e-9:
                bad = "rank mismatch S=%r R=%r" % (s, r)
                break
        check("offline optimum (brute force vs DP vs rank)", bad is None, bad)

    if "neighboring" in selected:
        bad = None
        for i in range(args.cases):
            inst = instances.gen_fully_random(50,
                                              trial_seed(args.seed, 100 + i))
            for algo in ("greedy", "threshold"):
                try:
                    algorithms.check_neighboring(inst, run_policy(inst, algo))
                except ValueError as exc:
                    bad = "%s: %s" % (algo, exc)
        check("neighboring matches (greedy, threshold)", bad is None, bad)

    if "structure" in selected:
        bad = None
        rng = np.random.default_rng(trial_seed(args.seed, 2))
        for i in range(args.cases):
            n = int(rng.integers(20, 80))
            zeros = int(rng.integers(1, max(2, n // 4)))
            y0 = float(rng.uniform(0.05, 0.3))
            # keep (0, y0] free of servers so the threshold policy's jump to
            # 0 stays a neighboring match
            pos = y0 + (1.0 - y0) * rng.random(n - zeros)
            servers = np.sort(np.concatenate([np.zeros(zeros), pos]))
            inst_i = instances.Instance(servers, rng.random(n), {})
            m = int(rng.integers(1, n + 1))
            tr = hybrid.run_hybrid_pair(inst_i, m, policy_a="threshold",
                                        y0=y0)
            rep = hybrid.verify_structure(tr)
            if not rep["ok"]:
                bad = rep["violations"][0]
                break
        check("hybrid marker structure", bad is None, bad)

    if "chain" in selected:
        ok = _chain_table_check(args.seed, max(args.cases * 100, 10000))
        check("gap chain case table", ok)

    return 0 if not failures else 1


def _chain_table_check(seed: int, steps: int) -> bool:
    rng = np.random.default_rng(trial_seed(seed, 3))
    done = 0
    while done < steps:
        zeros = int(rng.integers(1, 20))
        pos = np.unique(rng.random(int(rng.integers(2, 40))))
        pool = ServerPool(np.concatenate([np.zeros(zeros), pos]))
        st = gapchain.state_from_pool(pool)
        while pool.free_count > 0 and st.gamma > 0.0:
            r = float(rng.random())
            case = gapchain.classify_case(st, r)
            g = st.gamma
            s2 = pool.succ_strict(g) if g > 0 else None
            rec = gapchain.step_chain(st, r)
            if case:
                done += 1
                w = s2 - g
                expect = {1: (0.0, 0.0, g), 2: (g, 0.0, 0.0),
                          3: (g, s2, g + w), 4: (s2, s2, g)}
                if case in expect:
                    es, es2, eg = expect[case]
                    if rec.s != es or rec.s_prime != es2 \
                            or rec.gamma_after != eg:
                        return False
                else:  # case 5: both sides pick the same server >= g + w
                    if rec.s != rec.s_prime or rec.s < s2 \
                            or rec.gamma_after != g:
                        return False
    return True


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="linematch", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--model", required=True,
                   choices=("random", "excess", "lower", "hg"))
    g.add_argument("-n", "--n", type=int, required=True)
    g.add_argument("--eps", type=float, default=0.2)
    g.add_argument("--mode", choices=("demo", "faithful"), default="demo")
    g.add_argument("--kappa", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run one policy on an instance file")
    r.add_argument("--instance", required=True)
    r.add_argument("--algo", choices=POLICIES, default="greedy")
    r.add_argument("--y0", type=float, default=None)
    r.add_argument("--opt", action="store_true",
                   help="also report the offline optimum")
    r.add_argument("--trace", action="store_true",
                   help="emit the per-step trace")
    r.add_argument("--check-neighboring", action="store_true")
    r.add_argument("-o", "--output", default="-")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("scale", help="cost scaling sweep over n")
    s.add_argument("--config", default=None,
                   help="JSON sweep config (model/models, algos, n_list, "
                        "trials, seed, mode); overrides the flags below")
    s.add_argument("--model", default=None,
                   choices=("random", "excess", "lower", "hg"))
    s.add_argument("--algo", choices=POLICIES, default="greedy")
    s.add_argument("--ns", default=None,
                   help="comma separated n values, e.g. 1024,2048,4096")
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eps", type=float, default=0.2)
    s.add_argument("--mode", choices=("demo", "faithful"), default="demo")
    s.add_argument("--kappa", type=float, default=1.0)
    s.add_argument("--y0", type=float, default=None)
    s.add_argument("--no-opt", action="store_true")
    s.add_argument("--dat", default=None, help="also emit a gnuplot .dat file")
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_scale)

    h = sub.add_parser("hybrid", help="coupled H^m / H^(m-1) runs")
    h.add_argument("-n", "--n", type=int, required=True)
    h.add_argument("-m", "--m", type=int, default=0,
                   help="split point (default: random per trial)")
    h.add_argument("--model", choices=("random", "lower"), default="lower")
    h.add_argument("--mode", choices=("demo", "faithful"), default="demo")
    h.add_argument("--policy", choices=("greedy", "threshold"),
                   default="threshold")
    h.add_argument("--y0", type=float, default=None)
    h.add_argument("--trials", type=int, default=10)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("-o", "--output", default="-")
    h.set_defaults(func=cmd_hybrid)

    c = sub.add_parser("gap", help="gap-chain trials from an instance's pool")
    c.add_argument("--instance", required=True)
    c.add_argument("--steps", type=int, default=0,
                   help="steps per trial (default: pool size)")
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--y", type=float, default=None)
    c.add_argument("--front-death", action="store_true")
    c.add_argument("-o", "--output", default="-")
    c.set_defaults(func=cmd_gap)

    v = sub.add_parser("verify", help="self-check battery")
    v.add_argument("--oracle", action="store_true",
                   help="offline optimum cross-checks only")
    v.add_argument("--structure", action="store_true",
                   help="hybrid marker structure only")
    v.add_argument("--chain", action="store_true",
                   help="gap-chain case table only")
    v.add_argument("--neighboring", action="store_true",
                   help="neighboring-match property only")
    v.add_argument("--cases", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RuntimeError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        # bad parameters or unreadable inputs are usage errors
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
