"""Instance generators and the on-disk instance format.

Models:
  random  n servers and n requests, all i.i.d. uniform on [0, 1]
  excess  floor((1+eps) n) servers, n requests, all uniform
  lower   hard instance for greedy: a block of z servers at 0, an empty
          stretch (0, n^(-1/5)], then an even grid of spacing 1/n~ up to 1;
          n uniform requests.  faithful mode uses the 4 ln(n)^2 inflation
          (needs n >= ~8.3e5 to fit); demo mode replaces that factor by
          ln(n) so small n stays feasible.
  hg      hard instance for hierarchical greedy on [0, 1]: an even grid on
          (0, (1 - n^(-1/4))/2], a gap, a spike of n^(3/4) servers at
          (1 + n^(-1/4))/2, an even grid on (1/2, 1]; 2n uniform requests.

All logs are natural.  Positive duplicates (the hg spike) are nudged by
successive ULPs so pool locations stay distinct.
"""

import io
import json
import math

import numpy as np

from .core import Instance
from .seeding import rng_for_trial, trial_seed

MAGIC = "linematch-instance"
FORMAT_VERSION = "v1"


def nudge_duplicates(sorted_pos: np.ndarray) -> np.ndarray:
    """Make a sorted positive array strictly increasing by ULP nudges."""
    out = np.asarray(sorted_pos, dtype=float).copy()
    for i in range(1, len(out)):
        if out[i] <= out[i - 1]:
            out[i] = np.nextafter(out[i - 1], np.inf)
    return out


def gen_fully_random(n: int, seed: int) -> Instance:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng_for_trial(seed, 0)
    servers = np.sort(rng.random(n))
    requests = rng.random(n)
    return Instance(servers, requests,
                    {"model": "random", "params": {"n": n}, "seed": seed})


def gen_excess(n: int, eps: float, seed: int) -> Instance:
    if n < 1 or eps < 0:
        raise ValueError("need n >= 1 and eps >= 0")
    rng = rng_for_trial(seed, 0)
    servers = np.sort(rng.random(int(math.floor((1.0 + eps) * n))))
    requests = rng.random(n)
    return Instance(servers, requests,
                    {"model": "excess", "params": {"n": n, "eps": eps},
                     "seed": seed})


def lower_bound_layout(n: int, mode: str = "demo", kappa: float = 1.0):
    """Server layout of the lower-bound instance: (zeros, positive grid)."""
    if n < 16:
        raise ValueError("n must be >= 16")
    if mode not in ("demo", "faithful"):
        raise ValueError("mode must be demo or faithful")
    y0 = n ** (-0.2)
    f = 4.0 * math.log(n) ** 2 if mode == "faithful" else math.log(n)
    z = math.floor(n ** 0.8 + kappa * f * math.sqrt(n))
    if z >= n:
        raise ValueError(
            "zero block (%d) exceeds n=%d; faithful mode needs n >= ~8.3e5"
            % (z, n))
    ntilde = n - f * math.sqrt(n) / (1.0 - y0)
    grid = y0 + np.arange(1, n - z + 1) / ntilde
    # floor rounding can push a final grid point past 1; fold it into the
    # zero block so the instance stays balanced
    overflow = int(np.count_nonzero(grid > 1.0))
    if overflow:
        grid = grid[:-overflow]
        z += overflow
    return z, grid, y0, ntilde


def gen_lower_bound(n: int, seed: int, mode: str = "demo",
                    kappa: float = 1.0) -> Instance:
    z, grid, y0, ntilde = lower_bound_layout(n, mode, kappa)
    servers = np.concatenate([np.zeros(z), grid])
    rng = rng_for_trial(seed, 0)
    requests = rng.random(n)
    meta = {"model": "lower",
            "params": {"n": n, "mode": mode, "kappa": kappa},
            "seed": seed, "y0": y0, "z": z, "ntilde": ntilde}
    return Instance(servers, requests, meta)


def gen_hg_adversarial(n: int, seed: int) -> Instance:
    """2n servers / 2n requests; hierarchical greedy pays ~n^(1/4) * OPT."""
    if n < 16:
        raise ValueError("n must be >= 16")
    n34 = round(n ** 0.75)
    spike = (1.0 + n ** (-0.25)) / 2.0
    left = np.arange(1, n - n34 + 1) / (2.0 * n)
    right = np.arange(n + 1, 2 * n + 1) / (2.0 * n)
    servers = np.sort(np.concatenate([left, np.full(n34, spike), right]))
    servers = nudge_duplicates(servers)
    rng = rng_for_trial(seed, 0)
    requests = rng.random(2 * n)
    return Instance(servers, requests,
                    {"model": "hg", "params": {"n": n}, "seed": seed})


_GENERATORS = {
    "random": lambda n, seed, **kw: gen_fully_random(n, seed),
    "excess": lambda n, seed, eps=0.2, **kw: gen_excess(n, eps, seed),
    "lower": lambda n, seed, mode="demo", kappa=1.0, **kw:
        gen_lower_bound(n, seed, mode=mode, kappa=kappa),
    "hg": lambda n, seed, **kw: gen_hg_adversarial(n, seed),
}


def generate(model: str, n: int, seed: int, **params) -> Instance:
    if model not in _GENERATORS:
        raise ValueError("unknown model %r" % model)
    return _GENERATORS[model](n, seed, **params)


def generate_trial(model: str, n: int, master_seed: int, trial: int,
                   **params) -> Instance:
    """Instance for one trial of a sweep; seeds mixed per seeding.py."""
    return generate(model, n, trial_seed(master_seed, trial), **params)


class FormatError(ValueError):
    def __init__(self, lineno, msg):
        super().__init__("line %d: %s" % (lineno, msg))
        self.lineno = lineno


def write_instance(path_or_file, instance: Instance) -> None:
    """Write the v1 text format; hex floats round-trip bit exactly."""
    meta = instance.meta or {}
    model = meta.get("model", "custom")
    params = dict(meta.get("params", {}))
    if "seed" in meta:
        params["seed"] = meta["seed"]
    header = "%s %s %s %s" % (MAGIC, FORMAT_VERSION, model,
                              json.dumps(params, sort_keys=True))
    own = isinstance(path_or_file, (str, bytes))
    fh = open(path_or_file, "w", encoding="utf-8") if own else path_or_file
    try:
        fh.write(header + "\n")
        fh.write("S %d\n" % len(instance.servers))
        for s in instance.servers:
            fh.write(float(s).hex() + "\n")
        fh.write("R %d\n" % len(instance.requests))
        for r in instance.requests:
            fh.write(float(r).hex() + "\n")
    finally:
        if own:
            fh.close()


def _read_block(lines, idx, tag):
    lineno, line = lines[idx]
    parts = line.split()
    if len(parts) != 2 or parts[0] != tag:
        raise FormatError(lineno, "expected '%s <count>'" % tag)
    try:
        count = int(parts[1])
    except ValueError:
        raise FormatError(lineno, "bad count %r" % parts[1]) from None
    if count < 0:
        raise FormatError(lineno, "negative count")
    vals = np.empty(count)
    for i in range(count):
        if idx + 1 + i >= len(lines):
            raise FormatError(lines[-1][0], "truncated %s block" % tag)
        lno, text = lines[idx + 1 + i]
        try:
            vals[i] = float.fromhex(text)
        except ValueError:
            raise FormatError(lno, "bad hex float %r" % text) from None
    return vals, idx + 1 + count


def read_instance(path_or_file) -> Instance:
    own = isinstance(path_or_file, (str, bytes))
    fh = open(path_or_file, "r", encoding="utf-8") if own else path_or_file
    try:
        raw = fh.read()
    finally:
        if own:
            fh.close()
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw.splitlines())
             if ln.strip()]
    if not lines:
        raise FormatError(1, "empty file")
    head = lines[0][1].split(None, 3)
    if len(head) < 3 or head[0] != MAGIC:
        raise FormatError(lines[0][0], "bad header, expected '%s'" % MAGIC)
    if head[1] != FORMAT_VERSION:
        raise FormatError(lines[0][0], "unsupported version %r" % head[1])
    model = head[2]
    try:
        params = json.loads(head[3]) if len(head) > 3 else {}
    except json.JSONDecodeError:
        raise FormatError(lines[0][0], "bad params json") from None
    servers, idx = _read_block(lines, 1, "S")
    requests, idx = _read_block(lines, idx, "R")
    if idx != len(lines):
        raise FormatError(lines[idx][0], "trailing content")
    seed = params.pop("seed", None)
    meta = {"model": model, "params": params}
    if seed is not None:
        meta["seed"] = seed
    inst = Instance(servers, requests, meta)
    inst.validate()
    return inst


def instance_to_text(instance: Instance) -> str:
    buf = io.StringIO()
    write_instance(buf, instance)
    return buf.getvalue()
