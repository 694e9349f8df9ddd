"""Hamilton cycles by absorption.

Short vertex-disjoint cycles are threaded onto one long spine path through a
chosen edge of each cycle.  The two cycle-neighbours of that edge form a
flexible pair: a connecting path may route through the pair (taking the rest
of the cycle with it), or the pair stays put and the whole cycle is spliced
into the spine in place of the chosen edge.  The remaining vertices are
covered by a few paths whose endpoints see many flexible vertices, and the
connector joins all those paths into one cycle.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import DESK, AbsorberConfig, Profile
from .connector import (ConnectionFailure, PairList, PairListError, alt_path_spanning,
                        connect_pairs, validate_alternating)
from .forest import ForestStall, LinearForest, spanning_forest_good_endpoints
from .graph import Cycle, Graph, PathState, mask, verify_cycle_on, verify_hamilton_cycle
from .rotation import HamResult, hamilton_rotation
from .spectral import CleaningError, clean_subset, estimate_lambda, pair_clean

log = logging.getLogger(__name__)


class AbsorbStall(RuntimeError):
    def __init__(self, stage: str, detail: str = "", witness=None):
        super().__init__(f"{stage}: {detail}" if detail else stage)
        self.stage = stage
        self.witness = witness


# --- finding cycles -------------------------------------------------------

def _gather(g: Graph, frontier: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    starts, stops = g.indptr[frontier], g.indptr[frontier + 1]
    counts = stops - starts
    us = np.repeat(frontier, counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    return us, g.indices[np.repeat(starts, counts) + offs]


def shortest_cycle_through(g: Graph, root: int, avail: np.ndarray, max_len: int,
                           chunk_edges: int = 4096) -> list | None:
    """A shortest cycle through ``root`` inside the available vertices.

    Breadth-first search labelling every vertex with its first-level branch.
    While scanning level L an edge between branches closes a cycle of length
    2L + 1 (both ends at depth L) or 2L + 2 (the far end is new); shorter
    ones would have been seen at an earlier level.  Levels are scanned in
    chunks so that dense graphs stop at the first odd closure."""
    if not avail[root]:
        return None
    n = g.n
    depth = np.full(n, -1, dtype=np.int64)
    branch = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    depth[root] = 0
    frontier = np.array([root], dtype=np.int64)
    level = 0
    best = None
    step = max(1, chunk_edges // max(1, int(g.degree.max()) if n else 1))
    while frontier.size and 2 * level + 1 <= max_len:
        grown = []
        for k in range(0, frontier.size, step):
            us, ws = _gather(g, frontier[k:k + step])
            keep = avail[ws] & (ws != parent[us]) & (ws != root)
            us, ws = us[keep], ws[keep]
            dw = depth[ws]
            if level > 0:
                odd = (dw == level) & (branch[us] != branch[ws])
                if odd.any():
                    i = int(np.flatnonzero(odd)[0])
                    best = (2 * level + 1, int(us[i]), int(ws[i]))
                    break
            new = dw < 0
            nu, nw = us[new], ws[new]
            fresh, idx = np.unique(nw, return_index=True)
            parent[fresh] = nu[idx]
            depth[fresh] = level + 1
            branch[fresh] = fresh if level == 0 else branch[nu[idx]]
            grown.append(fresh)
            if best is None and level > 0:
                reach = (depth[ws] == level + 1) & (branch[us] != branch[ws])
                if reach.any():
                    i = int(np.flatnonzero(reach)[0])
                    best = (2 * level + 2, int(us[i]), int(ws[i]))
        if best is not None:
            break
        frontier = np.concatenate(grown) if grown else frontier[:0]
        level += 1
    if best is None or best[0] > max_len:
        return None
    _, u, w = best

    def up(v):
        out = []
        while v != -1:
            out.append(v)
            v = int(parent[v])
        return out

    left, right = up(u), up(w)
    return left[::-1] + right[:-1]


def find_disjoint_cycles(g: Graph, max_len: int = 6, target: int | None = None, rng=None,
                         cover: int | None = None) -> list:
    """Greedy vertex-disjoint short cycles: try each root in turn (random order
    when ``rng`` is given), take a shortest cycle through it among unused
    vertices.  Stops after ``target`` cycles or once ``cover`` vertices are used."""
    n = g.n
    avail = np.ones(n, dtype=bool)
    roots = np.random.default_rng(rng).permutation(n) if rng is not None else np.arange(n)
    cycles: list = []
    used = 0
    for r in roots.tolist():
        if target is not None and len(cycles) >= target:
            break
        if cover is not None and used >= cover:
            break
        c = shortest_cycle_through(g, r, avail, max_len)
        if c is None:
            continue
        avail[c] = False
        used += len(c)
        cycles.append(Cycle(c))
    return cycles


def sparsify_cycles(g: Graph, cycles: list, rng=None, cfg: AbsorberConfig | None = None,
                    d: float | None = None) -> list:
    """Drop overlong cycles, then keep each cycle with probability
    ``keep_prob``; retry until enough survive and every vertex keeps
    ``outside_frac * d`` neighbours off the kept cycles."""
    cfg = cfg or DESK.absorber
    if not cycles:
        return []
    rng = np.random.default_rng(rng)
    n = g.n
    d = d if d is not None else (g.regular_degree or g.mean_degree)
    t = len(cycles)
    cycles = [c for c in cycles if len(c) <= 100 * n / t]
    need = 0.75 * len(cycles) * (1 - cfg.kept_slack)
    A = g.adjacency()
    worst = None
    for _ in range(cfg.attempts):
        keep = rng.random(len(cycles)) < cfg.keep_prob
        kept = [c for c, k in zip(cycles, keep) if k]
        if len(kept) < need:
            continue
        on = mask(n, [v for c in kept for v in c]).astype(np.float64)
        outside = g.degree - np.asarray(A @ on).round().astype(np.int64)
        v = int(np.argmin(outside))
        if outside[v] >= cfg.outside_frac * d:
            return kept
        if worst is None or outside[v] < worst[1]:
            worst = (v, int(outside[v]))
    detail = "too few cycles kept" if worst is None else \
        f"vertex {worst[0]} keeps only {worst[1]} outside neighbours"
    raise AbsorbStall("sparsify", detail, worst)


# --- threading ------------------------------------------------------------

@dataclass
class AbsorbingCycle:
    """A cycle with its chosen edge (a, b) and flexible pair (x, y): x follows
    a and y follows b when walking around the cycle away from the edge."""
    order: tuple
    a: int
    b: int

    @classmethod
    def on_edge(cls, c, a: int, b: int) -> "AbsorbingCycle":
        o = list(c)
        i = o.index(a)
        o = o[i:] + o[:i]
        if o[1] != b:
            o = [o[0]] + o[1:][::-1]
        if o[1] != b:
            raise ValueError(f"{a}-{b} is not an edge of the cycle")
        return cls(tuple(o), a, b)

    @property
    def inner(self) -> list:
        """The cycle minus a and b, from x to y."""
        return list(self.order[2:][::-1])

    @property
    def x(self) -> int:
        return self.order[-1]

    @property
    def y(self) -> int:
        return self.order[2]

    @property
    def pair(self) -> tuple:
        return (self.x, self.y)

    def flipped(self) -> "AbsorbingCycle":
        return AbsorbingCycle.on_edge(self.order, self.b, self.a)


def chosen_edge(c) -> tuple:
    """Lexicographically smallest edge of a cycle."""
    return min((min(u, v), max(u, v)) for u, v in Cycle(c).edges())


def thread_cycles(g: Graph, cycles: list, rng=None) -> tuple[PathState, list]:
    """Thread the cycles onto one path through their chosen edges.

    Returns the spine and the cycles it connects, in spine order, each
    oriented so that a precedes b on the spine."""
    if not cycles:
        raise AbsorbStall("thread", "no cycles")
    recs = [AbsorbingCycle.on_edge(c, *chosen_edge(c)) for c in cycles]
    M = PairList([(r.a, r.b) for r in recs])
    alt = alt_path_spanning(g, M, rng)
    spine = PathState(alt.vertices, g.n)
    pos = {v: i for i, v in enumerate(alt.vertices)}
    used = []
    for i in alt.pairs:
        r = recs[i]
        used.append(r if pos[r.a] < pos[r.b] else r.flipped())
    bad = connects_problems(g, spine, used)
    if bad:
        raise AssertionError(f"internal error: threading broke the spine ({bad[0]})")
    return spine, used


def connects_problems(g: Graph, spine: PathState, cycles: list) -> list:
    """Everything that stops ``spine`` from connecting the cycles: each chosen
    edge is a spine edge and no other cycle vertex is on the spine."""
    out = []
    if not spine.is_valid(g):
        out.append("spine is not a path of the graph")
    for k, c in enumerate(cycles):
        if not verify_cycle_on(g, c.order, c.order):
            out.append(f"cycle {k} is not a cycle of the graph")
        if c.a not in spine or c.b not in spine or abs(spine.index(c.a) - spine.index(c.b)) != 1:
            out.append(f"cycle {k}: edge {c.a}-{c.b} is not a spine edge")
        if any(v in spine for v in c.order[2:]):
            out.append(f"cycle {k} meets the spine off its edge")
    return out


# --- trimming, cleaning, re-terminating -----------------------------------

@dataclass
class Trimmed:
    spine: PathState
    cycles: list
    flexible: PairList
    threshold: float            # flexible set min degree
    endpoint_threshold: float   # flexible neighbours needed at every endpoint
    dropped: int


def endpoint_window(cfg: AbsorberConfig, n: int, d: float, lam: float | None) -> int:
    if cfg.endpoint_window is not None:
        return max(1, cfg.endpoint_window)
    if lam is None:
        raise ValueError("the endpoint window needs lambda; pass a certificate")
    return max(1, math.ceil(2 * lam * n / d))


def trim_and_clean(g: Graph, spine: PathState, cycles: list, cfg: AbsorberConfig | None = None,
                   d: float | None = None, lam: float | None = None) -> Trimmed:
    cfg = cfg or DESK.absorber
    n = g.n
    d = d if d is not None else (g.regular_degree or g.mean_degree)
    w = endpoint_window(cfg, n, d, lam)
    order = spine.tolist()
    L = len(order)
    pos = {v: i for i, v in enumerate(order)}
    cut = int(cfg.trim_frac * len(cycles))
    kept = cycles[cut:len(cycles) - cut]
    kept = [c for c in kept if pos[c.a] >= w and pos[c.b] < L - w]
    if not kept:
        raise AbsorbStall("trim", f"no cycle survives trimming a window of {w}")
    pairs = [c.pair for c in kept]
    size = len({v for p in pairs for v in p})
    try:
        pc = pair_clean(g, pairs, d=d, threshold=cfg.flex_threshold_frac * d * size / n)
    except CleaningError as exc:
        raise AbsorbStall("clean", str(exc)) from exc
    alive = set(pc.kept)
    kept = [c for c in kept if c.pair in alive]
    F = PairList([c.pair for c in kept])
    Fm = mask(n, F.vertices)
    ft = cfg.endpoint_frac * d * len(F.vertices) / n
    need = max(1.0, ft)
    fdeg = np.asarray(g.adjacency() @ Fm.astype(np.float64)).round().astype(np.int64)
    start = next((i for i in range(min(w, L)) if fdeg[order[i]] >= need), None)
    end = next((j for j in range(L - 1, max(L - 1 - w, -1), -1) if fdeg[order[j]] >= need), None)
    if start is None or end is None or start >= end:
        side = "start" if start is None else "end"
        raise AbsorbStall("endpoint", f"no {side} within {w} positions has {need:.1f} flexible neighbours")
    new = PathState(order[start:end + 1], n)
    return Trimmed(new, kept, F, pc.threshold, need, len(cycles) - len(kept))


# --- good collections -----------------------------------------------------

@dataclass
class GoodCollection:
    spine: PathState
    cycles: list                 # AbsorbingCycle, in spine order
    flexible: PairList           # cycles[i].pair is flexible[i]
    residual: LinearForest
    delta: float                 # flexible set min degree
    endpoint_delta: float        # flexible neighbours of every endpoint
    info: dict = field(default_factory=dict)

    @property
    def params(self) -> tuple:
        return (1 + self.residual.count, len(self.cycles), self.delta)

    def paths(self) -> list:
        return [self.spine.tolist()] + [list(p) for p in self.residual.paths]


def collection_problems(g: Graph, col: GoodCollection) -> list:
    """Independent check of the three properties of a good collection."""
    out = connects_problems(g, col.spine, col.cycles)
    if [c.pair for c in col.cycles] != list(col.flexible.pairs):
        out.append("flexible pairs do not match the cycles")
    out += [f"residual: {p}" for p in col.residual.problems(g)]
    seen = np.zeros(g.n, dtype=np.int64)
    for v in col.spine:
        seen[v] += 1
    for c in col.cycles:
        for v in c.order[2:]:
            seen[v] += 1
    for p in col.residual.paths:
        for v in p:
            seen[v] += 1
    if (seen > 1).any():
        out.append(f"{int((seen > 1).sum())} vertices covered twice")
    if (seen == 0).any():
        out.append(f"{int((seen == 0).sum())} vertices uncovered")
    Fm = mask(g.n, col.flexible.vertices)
    fdeg = np.asarray(g.adjacency() @ Fm.astype(np.float64)).round().astype(np.int64)
    if Fm.any() and fdeg[Fm].min() < col.delta:
        out.append(f"flexible set has min degree {int(fdeg[Fm].min())} < {col.delta:.2f}")
    for p in col.paths():
        for v in {p[0], p[-1]}:
            if fdeg[v] < col.endpoint_delta:
                out.append(f"endpoint {v} has {int(fdeg[v])} flexible neighbours")
    return out


def _lambda(g: Graph, cert, cfg: AbsorberConfig):
    if cert is not None:
        return cert.lam
    if cfg.endpoint_window is not None or g.regular_degree is None:
        return None
    return estimate_lambda(g).lam


def assemble_good_collection(g: Graph, cert=None, profile: Profile | None = None, rng=None,
                             cycles: list | None = None) -> GoodCollection:
    """Find, sparsify and thread cycles, trim and clean the flexible set, and
    cover the rest by a linear forest with endpoints rich in flexible vertices."""
    profile = profile or DESK
    cfg = profile.absorber
    rng = np.random.default_rng(rng)
    n = g.n
    d = cert.d if cert is not None else (g.regular_degree or g.mean_degree)
    lam = _lambda(g, cert, cfg)
    info: dict = {}
    if cycles is None:
        cycles = find_cycle_supply(g, cfg, rng)
    info["found"] = len(cycles)
    kept = sparsify_cycles(g, cycles, rng, cfg, d)
    info["sparsified"] = len(kept)
    spine, used = thread_cycles(g, kept, rng)
    info["threaded"] = len(used)
    tr = trim_and_clean(g, spine, used, cfg, d, lam)
    info["flexible"] = len(tr.cycles)
    taken = mask(n, tr.spine.tolist())
    for c in tr.cycles:
        taken[list(c.order[2:])] = True
    Y = np.flatnonzero(~taken).tolist()
    if Y:
        Fm = mask(n, tr.flexible.vertices).astype(np.float64)
        fdeg = np.asarray(g.adjacency() @ Fm).round()
        good = [v for v in Y if fdeg[v] >= tr.endpoint_threshold]
        try:
            clean = clean_subset(g, good, d=d).kept if good else frozenset()
        except CleaningError:
            clean = frozenset()
        X = [v for v in Y if v not in clean]
        info["bad"] = len(X)
        try:
            forest = spanning_forest_good_endpoints(g, X, Y, d / 100, rng, profile.forest)
        except ForestStall as exc:
            raise AbsorbStall("forest", str(exc), exc.witness) from exc
        bad = forest.problems(g, Y, X)
        if bad:
            raise AbsorbStall("forest", bad[0])
    else:
        forest = LinearForest([], {})
    budget = cfg.path_budget(len(tr.cycles), n)
    info["residual"] = forest.count
    if forest.count > budget:
        raise AbsorbStall("paths", f"{forest.count} residual paths, budget {budget}", forest.count)
    col = GoodCollection(tr.spine, tr.cycles, tr.flexible, forest, tr.threshold,
                         tr.endpoint_threshold, info)
    bad = collection_problems(g, col)
    if bad:
        raise AssertionError(f"internal error: collection invalid ({bad[0]})")
    return col


def find_cycle_supply(g: Graph, cfg: AbsorberConfig, rng=None) -> list:
    n = g.n
    if cfg.cover_frac is not None and cfg.cycle_target is None:
        return find_disjoint_cycles(g, cfg.max_cycle_len, rng=rng, cover=int(cfg.cover_frac * n))
    return find_disjoint_cycles(g, cfg.max_cycle_len, cfg.cycle_target_for(n), rng=rng)


# --- weaving --------------------------------------------------------------

def _expand_connection(col: GoodCollection, path: list, used: set) -> list:
    """Interior of a connecting path with every flexible pair replaced by the
    rest of its cycle."""
    F = col.flexible
    inner = path[1:-1]
    out = []
    i = 0
    while i < len(inner):
        v = inner[i]
        k = F.index[v]
        used.add(k)
        c = col.cycles[k]
        if c.x == c.y:
            out.append(v)
            i += 1
            continue
        body = c.inner
        out.extend(body if v == c.x else body[::-1])
        i += 2
    return out


def _absorb_into_spine(col: GoodCollection, used: set) -> list:
    order = col.spine.tolist()
    after: dict = {}
    pos = {v: i for i, v in enumerate(order)}
    for k, c in enumerate(col.cycles):
        if k in used:
            continue
        pa, pb = pos[c.a], pos[c.b]
        after[min(pa, pb)] = c.inner if pa < pb else c.inner[::-1]
    out = []
    for i, v in enumerate(order):
        out.append(v)
        out.extend(after.get(i, ()))
    return out


def hamilton_from_collection(g: Graph, col: GoodCollection, rng=None,
                             profile: Profile | None = None) -> Cycle:
    """Join the collection's paths cyclically through the flexible pairs and
    splice every unused cycle into the spine."""
    profile = profile or DESK
    bad = collection_problems(g, col)
    if bad:
        raise AbsorbStall("collection", bad[0])
    paths = col.paths()
    r = len(paths)
    terminals = [(paths[j][-1], paths[(j + 1) % r][0]) for j in range(r)]
    res = connect_pairs(g, col.flexible, terminals, rng, profile.connector)
    for q in res.paths:
        ok, why = validate_alternating(g, col.flexible, q, terminals=True)
        if not ok:
            raise AssertionError(f"internal error: connecting path is not alternating ({why})")
    used: set = set()
    links = [_expand_connection(col, q, used) for q in res.paths]
    paths[0] = _absorb_into_spine(col, used)
    order = []
    for p, link in zip(paths, links):
        order.extend(p)
        order.extend(link)
    cyc = Cycle(order)
    check = verify_hamilton_cycle(g, cyc)
    if not check:
        raise AssertionError(f"internal error: absorption produced an invalid cycle ({check.reason})")
    return cyc


# --- drivers --------------------------------------------------------------

_STALLS = (AbsorbStall, ConnectionFailure, PairListError)


def _ms(t0):
    return (time.perf_counter() - t0) * 1000.0


def hamilton_absorb(g: Graph, cert=None, profile: Profile | None = None, seed=0,
                    retries: int | None = None, fallback: bool | None = None) -> HamResult:
    """Absorbing strategy with fresh randomness per attempt.  Cycles are found
    once and re-found only when threading starves.  When every attempt stalls
    and ``fallback`` is on, the rotation strategy takes over."""
    profile = profile or DESK
    cfg = profile.absorber
    retries = cfg.retries if retries is None else retries
    fallback = cfg.fallback if fallback is None else fallback
    res = HamResult(False, None, None, "absorb")
    n = g.n
    if n >= 3 and g.is_connected():
        cycles = None
        for attempt in range(retries):
            rng = np.random.default_rng([int(seed), attempt])
            res.attempts = attempt + 1
            if cycles is None:
                t0 = time.perf_counter()
                cycles = find_cycle_supply(g, cfg, rng)
                res.stage("cycles", _ms(t0), bool(cycles))
                for c in cycles:
                    res.offer(c)
                if len(cycles) < 2:
                    res.failure = f"only {len(cycles)} short cycles"
                    break
            t0 = time.perf_counter()
            try:
                col = assemble_good_collection(g, cert, profile, rng, cycles)
            except _STALLS as exc:
                res.stage("collection", _ms(t0), False)
                stage = getattr(exc, "stage", type(exc).__name__)
                res.stage(f"stall:{stage}", 0.0)
                res.failure = str(exc)
                if stage == "thread":
                    cycles = None
                continue
            res.stage("collection", _ms(t0), True)
            t0 = time.perf_counter()
            try:
                cyc = hamilton_from_collection(g, col, rng, profile)
            except _STALLS as exc:
                res.stage("weave", _ms(t0), False)
                res.stage(f"stall:{getattr(exc, 'stage', type(exc).__name__)}", 0.0)
                res.failure = str(exc)
                continue
            res.stage("weave", _ms(t0), True)
            res.offer(cyc)
            res.success = True
            res.cycle = cyc
            res.failure = None
            return res
    else:
        res.failure = "graph is disconnected" if n >= 3 else "fewer than three vertices"
    if not fallback:
        res.failure = res.failure or "no spanning cycle within the retry budget"
        return res
    rot = hamilton_rotation(g, cert, profile.rotation, seed)
    rot.notes = res.notes + [f"absorbing failed after {res.attempts} attempts ({res.failure}); used rotation"]
    rot.strategy = "absorb->rotation"
    rot.attempts += res.attempts
    for k, v in res.stages.items():
        rot.stages[f"absorb:{k}"] = v
    if res.longest is not None:
        rot.offer(res.longest)
    return rot


def cycle_supply_ok(g: Graph, cfg: AbsorberConfig) -> tuple[bool, int]:
    """Cheap check used by the automatic strategy: enough vertices and at
    least ``min_cycles`` disjoint short cycles."""
    if g.n < cfg.min_n:
        return False, 0
    found = len(find_disjoint_cycles(g, cfg.max_cycle_len, cfg.min_cycles))
    return found >= cfg.min_cycles, found


def hamilton_auto(g: Graph, cert=None, profile: Profile | None = None, seed=0,
                  retries: int | None = None) -> HamResult:
    profile = profile or DESK
    ok, found = cycle_supply_ok(g, profile.absorber)
    if ok:
        res = hamilton_absorb(g, cert, profile, seed, retries)
    else:
        res = hamilton_rotation(g, cert, profile.rotation, seed, retries)
    why = f"auto: {'absorb' if ok else 'rotation'} ({found} short cycles, n={g.n})"
    log.info(why)
    res.notes.insert(0, why)
    return res
