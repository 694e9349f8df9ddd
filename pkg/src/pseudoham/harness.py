"""Seeded experiment presets: build a graph per trial, search for a Hamilton
cycle, record one CSV row per trial."""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import generators as gen
from .absorber import hamilton_absorb, hamilton_auto
from .config import DESK, PROFILES, Profile
from .graph import Cycle, Graph, verify_hamilton_cycle
from .rotation import HamResult, hamilton_rotation
from .spectral import estimate_lambda

COLUMNS = ["preset", "n", "d", "lambda", "strategy", "seed", "success", "cycle_len", "wall_ms"]
THREADS_ENV = "PSEUDOHAM_THREADS"


def solve(g: Graph, strategy: str = "auto", cert=None, profile: Profile | None = None,
          seed: int = 0, retries: int | None = None) -> HamResult:
    profile = profile or DESK
    if strategy == "rotation":
        return hamilton_rotation(g, cert, profile.rotation, seed, retries)
    if strategy == "absorb":
        return hamilton_absorb(g, cert, profile, seed, retries)
    if strategy == "auto":
        return hamilton_auto(g, cert, profile, seed, retries)
    raise ValueError(f"unknown strategy {strategy!r}")


def result_json(res: HamResult, timings: bool = True) -> dict:
    """Plain-data view of a search result; everything except ``timings``
    depends only on the inputs and the seed."""
    out = {
        "success": res.success,
        "strategy": res.strategy,
        "attempts": res.attempts,
        "cycle": list(res.cycle.order) if res.cycle is not None else None,
        "longest_len": res.longest_len,
        "longest": list(res.longest.order) if res.longest is not None else None,
        "failure": res.failure,
        "notes": list(res.notes),
    }
    if timings:
        out["timings"] = {k: dict(v) for k, v in sorted(res.stages.items())}
    return out


# --- presets ----------------------------------------------------------------

@dataclass
class Instance:
    graph: Graph
    meta: dict = field(default_factory=dict)


def _random_cayley(rng, group: str = "z2^10", d: int = 46) -> Instance:
    grp = gen.parse_group(group)
    g, gens = gen.random_cayley(grp, int(d), rng)
    return Instance(g, {"gens": gens})


_FACTOR_CACHE: dict = {}


def _colour_union(rng, n: int = 1024, k: int = 92) -> Instance:
    n = int(n)
    if n not in _FACTOR_CACHE:
        _FACTOR_CACHE[n] = gen.one_factorization(n)
    factors = _FACTOR_CACHE[n]
    fu = gen.sample_factor_union(factors, int(k), rng)
    colour = {}
    for i in sorted(set(fu.picks)):
        for a, b in factors[i]:
            colour[(a, b)] = i
    return Instance(fu.graph, {"colour": colour, "k": int(k), "distinct": fu.distinct})


def _cayley_sum(rng, q: int = 101, size: int = 25) -> Instance:
    sg = gen.cayley_sum_subgroup(int(q), int(size))
    return Instance(sg.graph, {"subgroup": sg.subgroup, "q": int(q)})


def _gnp_threshold(rng, n: int = 2000, c: float = 100.0) -> Instance:
    n = int(n)
    p = min(1.0, float(c) * math.log(n) / n)
    return Instance(gen.gnp(n, p, rng), {"p": p})


PRESETS = {
    "random-cayley": _random_cayley,
    "colour-union": _colour_union,
    "cayley-sum": _cayley_sum,
    "gnp-threshold": _gnp_threshold,
}

DEFAULT_STRATEGY = {
    "random-cayley": "auto",
    "colour-union": "auto",
    "cayley-sum": "auto",
    "gnp-threshold": "rotation",
}


def colours_used(cycle: Cycle, colour: dict) -> int:
    return len({colour[(min(a, b), max(a, b))] for a, b in cycle.edges()})


def sums_in_subgroup(cycle: Cycle, subgroup, q: int) -> bool:
    """Every two consecutive elements of the cyclic ordering sum into the subgroup."""
    sub = set(subgroup)
    return all((a + b) % q in sub for a, b in cycle.edges())


def trial_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1)[0])


def run_trial(preset: str, params: dict, index: int, master: int, strategy: str | None = None,
              profile: str = "desk", with_lambda: bool = True) -> dict:
    seed = trial_seed(master, index)
    rng = np.random.default_rng(seed)
    inst = PRESETS[preset](rng, **params)
    g = inst.graph
    strategy = strategy or DEFAULT_STRATEGY[preset]
    cert = None
    lam = None
    if with_lambda and g.regular_degree is not None and g.regular_degree > 0:
        cert = estimate_lambda(g, 1e-6)
        lam = cert.lam
    t0 = time.perf_counter()
    res = solve(g, strategy, cert, PROFILES[profile], seed)
    wall = (time.perf_counter() - t0) * 1000.0
    if res.success and not verify_hamilton_cycle(g, res.cycle):
        raise AssertionError("emitted cycle failed verification")
    row = {
        "preset": preset, "n": g.n,
        "d": g.regular_degree if g.regular_degree is not None else round(g.mean_degree, 3),
        "lambda": "" if lam is None else round(lam, 6),
        "strategy": res.strategy, "seed": seed, "success": int(res.success),
        "cycle_len": len(res.cycle) if res.success else res.longest_len,
        "wall_ms": round(wall, 1),
    }
    if preset == "colour-union":
        row["colours"] = colours_used(res.cycle, inst.meta["colour"]) if res.success else ""
        row["k"] = inst.meta["k"]
    if preset == "cayley-sum":
        row["ordering_ok"] = int(res.success and sums_in_subgroup(res.cycle, inst.meta["subgroup"],
                                                                    inst.meta["q"]))
    return row


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_experiment(preset: str, params: dict | None = None, trials: int = 20, seed: int = 0,
                   strategy: str | None = None, profile: str = "desk",
                   workers: int | None = None, with_lambda: bool = True) -> list:
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    params = dict(params or {})
    workers = default_workers() if workers is None else workers
    args = [(preset, params, i, seed, strategy, profile, with_lambda) for i in range(trials)]
    if workers <= 1:
        return [run_trial(*a) for a in args]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(run_trial, *zip(*args)))


def summarize(rows: list) -> dict:
    out: dict = {}
    for preset in sorted({r["preset"] for r in rows}):
        rs = [r for r in rows if r["preset"] == preset]
        s = {
            "trials": len(rs),
            "success_rate": sum(r["success"] for r in rs) / len(rs),
            "mean_wall_ms": float(np.mean([r["wall_ms"] for r in rs])),
            "strategies": sorted({r["strategy"] for r in rs}),
        }
        cols = [r["colours"] for r in rs if r.get("colours", "") != ""]
        if cols:
            s["max_colours"] = max(cols)
            s["mean_colours"] = float(np.mean(cols))
        if "ordering_ok" in rs[0]:
            s["orderings_validated"] = sum(r["ordering_ok"] for r in rs)
        out[preset] = s
    return out


def write_csv(rows: list, path: str) -> None:
    extra = sorted({k for r in rows for k in r} - set(COLUMNS))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS + extra, restval="")
        w.writeheader()
        w.writerows(rows)


def read_csv(path: str) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for key in ("n", "seed", "success", "cycle_len"):
            r[key] = int(r[key])
        r["wall_ms"] = float(r["wall_ms"])
    return rows


def write_summary(rows: list, path: str, extra: dict | None = None) -> dict:
    s = {"summary": summarize(rows)}
    if extra:
        s.update(extra)
    with open(path, "w") as fh:
        json.dump(s, fh, indent=2, sort_keys=True)
    return s

