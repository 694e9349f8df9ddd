"""Command-line entry point.

Exit codes: 0 success, 1 the algorithm failed, 2 bad usage, 3 invalid input.
"""
from __future__ import annotations

import argparse
import inspect
import json
import logging
import os
import sys
import time

from . import generators as gen
from . import harness, report
from .config import PROFILES
from .graph import GraphError, format_edge_list, format_json, read_cycle, read_graph, \
    verify_hamilton_cycle
from .spectral import NotRegularError, estimate_lambda

OK, FAILED, USAGE, INVALID = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- gen ----------------------------------------------------------------------

def _make_graph(a) -> tuple:
    rng = gen.as_rng(a.seed)
    meta: dict = {}
    kind = a.kind
    if kind == "cayley":
        grp = gen.parse_group(a.group)
        gens = [_element(grp, t) for t in a.gens.split(",") if t.strip()]
        g = gen.cayley(grp, gens)
        meta["gens"] = gens
    elif kind == "random-cayley":
        g, gens = gen.random_cayley(gen.parse_group(a.group), a.d, rng)
        meta["gens"] = gens
    elif kind == "paley":
        g = gen.paley(a.q)
    elif kind == "cayley-sum":
        sg = gen.cayley_sum_subgroup(a.q, a.size)
        g = sg.graph
        meta.update(subgroup=sg.subgroup, regular=sg.regular, degrees=list(sg.degrees))
    elif kind == "factor-union":
        fu = gen.sample_factor_union(gen.one_factorization(a.n), a.k, rng)
        g = fu.graph
        meta.update(picks=fu.picks, distinct=fu.distinct, repeated=fu.repeated)
    elif kind == "regular":
        g = gen.random_regular(a.n, a.d, rng)
    elif kind == "gnp":
        g = gen.gnp(a.n, a.p, rng)
    elif kind == "complete":
        g = gen.complete(a.n)
    elif kind == "cycle":
        g = gen.cycle_graph(a.n)
    elif kind == "petersen":
        g = gen.petersen()
    else:
        raise UsageError(f"unknown graph kind {kind!r}")
    return g, meta


def _element(grp, token: str) -> int:
    """Group elements as integers, or ``e<i>`` for the i-th unit vector of z2^k."""
    token = token.strip()
    if token.startswith("e") and token[1:].isdigit():
        return 1 << (int(token[1:]) - 1)
    return int(token)


def cmd_gen(a) -> int:
    g, meta = _make_graph(a)
    text = format_json(g) if a.format == "json" else format_edge_list(g)
    _emit(text, a.out)
    if meta and a.meta:
        with open(a.meta, "w") as fh:
            json.dump(meta, fh)
    return OK


# --- certify / ham / verify ---------------------------------------------------

def cmd_certify(a) -> int:
    g = read_graph(a.graph)
    cert = estimate_lambda(g, a.tol, method=a.method)
    _emit(cert.to_json() + "\n", a.out)
    return OK


def _profile(a):
    prof = PROFILES[a.profile]
    return prof.with_rotation(k=a.k, delta_frac=a.delta_frac, gamma=a.gamma, depth_cap=a.depth_cap)


def cmd_ham(a) -> int:
    g = read_graph(a.graph)
    cert = None
    if a.cert:
        from .spectral import SpectralCertificate
        with open(a.cert) as fh:
            cert = SpectralCertificate.from_json(fh.read())
    t0 = time.perf_counter()
    res = harness.solve(g, a.strategy, cert, _profile(a), a.seed, a.retries)
    wall = (time.perf_counter() - t0) * 1000.0
    if res.success and not verify_hamilton_cycle(g, res.cycle):
        raise AssertionError("emitted cycle failed verification")
    report_ = {
        "command": ["ham", a.graph, "--strategy", a.strategy, "--seed", str(a.seed)],
        "seed": a.seed,
        "n": g.n,
        **harness.result_json(res, timings=False),
    }
    if a.cycle_out and res.success:
        with open(a.cycle_out, "w") as fh:
            fh.write(" ".join(map(str, res.cycle.order)) + "\n")
        report_["artifacts"] = [a.cycle_out]
    if not a.no_timings:
        report_["timings"] = {"wall_ms": round(wall, 3),
                              **{k: dict(v) for k, v in sorted(res.stages.items())}}
    _emit(json.dumps(report_, sort_keys=True) + "\n", a.out)
    return OK if res.success else FAILED


def cmd_verify(a) -> int:
    g = read_graph(a.graph)
    c = read_cycle(a.cycle)
    check = verify_hamilton_cycle(g, c)
    print(json.dumps({"valid": bool(check), "reason": check.reason}))
    return OK if check else FAILED


# --- experiments --------------------------------------------------------------

def _params(pairs) -> dict:
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise UsageError(f"parameter {p!r} is not key=value")
        k, v = p.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _run_and_write(presets, a, params_for) -> dict:
    os.makedirs(os.path.dirname(os.path.abspath(a.out)), exist_ok=True)
    rows = []
    for preset in presets:
        rows += harness.run_experiment(preset, params_for(preset), a.trials, a.seed,
                                       a.strategy, a.profile, a.workers)
    harness.write_csv(rows, a.out)
    figs = report.render(rows, a.out)
    js = os.path.splitext(a.out)[0] + ".json"
    summary = harness.write_summary(rows, js, {"seed": a.seed, "trials": a.trials,
                                              "artifacts": [a.out, js] + figs})
    print(json.dumps(summary["summary"], sort_keys=True))
    return summary


def cmd_experiment(a) -> int:
    params = _params(a.param)
    known = set(inspect.signature(harness.PRESETS[a.preset]).parameters) - {"rng"}
    unknown = set(params) - known
    if unknown:
        raise UsageError(f"preset {a.preset} takes {sorted(known)}, not {sorted(unknown)}")
    _run_and_write([a.preset], a, lambda _p: params)
    return OK


BENCH_PARAMS = {
    "random-cayley": {"group": "z2^8", "d": 32},
    "colour-union": {"n": 256, "k": 64},
    "cayley-sum": {"q": 101, "size": 25},
    "gnp-threshold": {"n": 500, "c": 20},
}


def cmd_bench(a) -> int:
    """Every preset at a reduced size."""
    _run_and_write(sorted(harness.PRESETS), a, lambda p: BENCH_PARAMS[p])
    return OK


def cmd_report(a) -> int:
    rows = harness.read_csv(a.csv)
    for f in report.render(rows, a.csv):
        print(f)
    return OK


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS,
                        help="more logging (repeatable)")
    p = argparse.ArgumentParser(prog="pseudoham", description=__doc__.splitlines()[0],
                                parents=[common])
    sub = p.add_subparsers(dest="cmd", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    g = sub.add_parser("gen", help="generate a graph")
    g.add_argument("kind", choices=["cayley", "random-cayley", "paley", "cayley-sum", "factor-union",
                                    "regular", "gnp", "complete", "cycle", "petersen"])
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--d", type=int, default=10)
    g.add_argument("--p", type=float, default=0.1)
    g.add_argument("--q", type=int, default=13)
    g.add_argument("--size", type=int, default=4)
    g.add_argument("--k", type=int, default=4)
    g.add_argument("--group", default="z2^8")
    g.add_argument("--gens", default="e1,e2,e3")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=["edges", "json"], default="edges")
    g.add_argument("--out")
    g.add_argument("--meta", help="write generator metadata (generators, picks) as JSON here")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("certify", help="spectral certificate of a regular graph")
    c.add_argument("graph")
    c.add_argument("--tol", type=float, default=1e-8)
    c.add_argument("--method", choices=["exact-dense", "iterative-deflated"])
    c.add_argument("--out")
    c.set_defaults(func=cmd_certify)

    h = sub.add_parser("ham", help="search for a Hamilton cycle")
    h.add_argument("graph")
    h.add_argument("--strategy", choices=["rotation", "absorb", "auto"], default="auto")
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--retries", type=int)
    h.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    h.add_argument("--cert", help="certificate JSON from 'certify'")
    h.add_argument("--k", type=int, help="intervals per half path")
    h.add_argument("--delta-frac", type=float, help="clean-collection degree as a fraction of d")
    h.add_argument("--gamma", type=float, help="spread fraction")
    h.add_argument("--depth-cap", type=int, help="rotation depth")
    h.add_argument("--cycle-out", help="write the cycle here on success")
    h.add_argument("--no-timings", action="store_true", help="omit the timings field")
    h.add_argument("--out")
    h.set_defaults(func=cmd_ham)

    v = sub.add_parser("verify", help="check a Hamilton cycle")
    v.add_argument("graph")
    v.add_argument("cycle")
    v.set_defaults(func=cmd_verify)

    def experiment_flags(e, out_default):
        e.add_argument("--trials", type=int, default=20)
        e.add_argument("--seed", type=int, default=0)
        e.add_argument("--strategy", choices=["rotation", "absorb", "auto"])
        e.add_argument("--profile", choices=sorted(PROFILES), default="desk")
        e.add_argument("--workers", type=int, help=f"worker processes (default ${harness.THREADS_ENV} or 1)")
        e.add_argument("--out", default=out_default)

    e = sub.add_parser("experiment", help="run a seeded experiment preset")
    e.add_argument("preset", choices=sorted(harness.PRESETS))
    e.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="preset parameter, e.g. d=46 or n=2000 (repeatable)")
    experiment_flags(e, "results/experiment.csv")
    e.set_defaults(func=cmd_experiment)

    b = sub.add_parser("bench", help="all presets at reduced size")
    experiment_flags(b, "results/bench.csv")
    b.set_defaults(func=cmd_bench, trials=5)

    r = sub.add_parser("report", help="redraw the figures of an experiment CSV")
    r.add_argument("csv")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    logging.basicConfig(level=logging.WARNING - 10 * min(getattr(a, "verbose", 0), 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return a.func(a)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (GraphError, NotRegularError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVALID


if __name__ == "__main__":
    sys.exit(main())
