"""Spanning linear forests with few paths whose endpoints avoid a bad set.

Pipeline: cover the bad set X by paths with ends outside X (binary trees
from a doubled bipartite matching, peeled into root-through paths), contract
each covering path to a single vertex of a randomly oriented digraph, take
a union of edge-disjoint 1-factors of that digraph, stitch its cycles into
few paths, expand the contracted vertices again and finally merge leftover
paths with rotations.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DESK, ForestConfig
from .connector import Digraph
from .graph import Graph, PathState, mask
from .matching import bipartite_matching
from .rotation import endpoint_expansion

log = logging.getLogger(__name__)


@dataclass
class LinearForest:
    paths: list
    info: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.paths)

    @property
    def cover(self) -> frozenset:
        return frozenset(v for p in self.paths for v in p)

    def endpoints(self) -> set:
        return {v for p in self.paths for v in (p[0], p[-1])}

    def to_json(self) -> dict:
        return {"paths": [list(map(int, p)) for p in self.paths]}

    def problems(self, g: Graph, Y=None, X=None) -> list:
        """Everything wrong with this forest as a spanning forest of G[Y]
        with endpoints outside X; empty when valid."""
        out = []
        seen: set = set()
        for i, p in enumerate(self.paths):
            if not p:
                out.append(f"path {i} is empty")
                continue
            if seen & set(p) or len(set(p)) != len(p):
                out.append(f"path {i} overlaps")
            seen.update(p)
            for a, b in zip(p, p[1:]):
                if not g.has_edge(a, b):
                    out.append(f"path {i} uses non-edge {a}-{b}")
                    break
        if Y is not None:
            Yset = set(Y)
            if seen != Yset:
                out.append(f"covers {len(seen)} vertices, Y has {len(Yset)}")
        if X is not None:
            bad = self.endpoints() & set(X)
            if bad:
                out.append(f"{len(bad)} endpoints in X")
        return out


class ForestStall(RuntimeError):
    def __init__(self, stage: str, detail: str = "", witness=None):
        super().__init__(f"{stage}: {detail}" if detail else stage)
        self.stage = stage
        self.witness = witness


# --- covering the bad set ---------------------------------------------------

def bad_set_order(g: Graph, X, Y, delta: float) -> list:
    """Order X so each vertex has at least max(delta/2, 2) neighbours among
    earlier vertices of X and Y minus X."""
    Xl = sorted(set(X))
    inX = mask(g.n, Xl)
    good = mask(g.n, Y) & ~inX
    need = max(delta / 2, 2)
    cnt = {x: int(good[g.neighbors(x)].sum()) for x in Xl}
    left = set(Xl)
    order = []
    while left:
        x = min((v for v in left if cnt[v] >= need), default=None)
        if x is None:
            raise ForestStall("ordering", f"{len(left)} vertices of X lack {need:g} usable neighbours",
                              sorted(left))
        left.discard(x)
        order.append(x)
        for w in g.neighbors(x).tolist():
            if w in left:
                cnt[w] += 1
    return order


def cover_bad_set(g: Graph, X, Y, delta: float) -> LinearForest:
    """Paths covering X with both ends in Y minus X and all inner vertices in X."""
    X = set(X)
    if not X:
        return LinearForest([])
    Y = set(Y)
    if not X <= Y:
        raise ValueError("X must be a subset of Y")
    order = bad_set_order(g, X, Y, delta)
    rank = {x: i for i, x in enumerate(order)}
    Yl = sorted(Y)
    col = {v: i for i, v in enumerate(Yl)}
    edges = []
    for i, x in enumerate(order):
        for w in g.neighbors(x).tolist():
            if w in Y and (w not in X or rank[w] < i):
                edges.append((2 * i, col[w]))
                edges.append((2 * i + 1, col[w]))
    res = bipartite_matching(2 * len(order), len(Yl), edges)
    if not res.perfect:
        viol = sorted({order[a // 2] for a in res.violator})
        raise ForestStall("matching", f"no matching covers both copies of {len(viol)} vertices", viol)
    children = {x: [Yl[res.match[2 * i]], Yl[res.match[2 * i + 1]]] for i, x in enumerate(order)}
    has_parent = {c for cs in children.values() for c in cs}
    roots = [x for x in reversed(order) if x not in has_parent]
    paths = []
    alive = set(X) | has_parent
    stack = list(roots)
    while stack:
        r = stack.pop()
        if r not in alive:
            continue
        if r not in X:
            alive.discard(r)          # isolated leaf: stays outside the cover
            continue
        halves = []
        for c in children[r]:
            branch = []
            v = c
            while True:
                branch.append(v)
                if v not in X:
                    break
                nxt = children[v]
                for other in nxt[1:]:
                    stack.append(other)
                v = nxt[0]
            halves.append(branch)
        path = halves[0][::-1] + [r] + halves[1]
        alive.difference_update(path)
        paths.append(path)
    return LinearForest(paths)


# --- contraction ------------------------------------------------------------

class ContractedDigraph(Digraph):
    """Digraph on one vertex per covering path plus the plain vertices.

    Local vertex i < len(cover) is the contracted path i, entered at
    ``tail[i]`` and left at ``head[i]``."""

    def __init__(self, n: int, arcs, cover: list, head: list, tail: list, plain: np.ndarray, seed=None):
        super().__init__(n, arcs)
        self.cover = cover
        self.head = head
        self.tail = tail
        self.plain = plain
        self.seed = seed

    @property
    def z(self) -> int:
        return len(self.cover)

    def expand(self, local_path) -> list:
        out = []
        for u in local_path:
            u = int(u)
            if u < self.z:
                p = self.cover[u]
                out.extend(p if p[0] == self.tail[u] else p[::-1])
            else:
                out.append(int(self.plain[u - self.z]))
        return out


def contract_and_orient(g: Graph, Y, cover: LinearForest, rng=None) -> ContractedDigraph:
    """Contract each covering path, orient it at random and orient G[plain] at random."""
    seed = rng if not isinstance(rng, np.random.Generator) else None
    rng = np.random.default_rng(rng)
    paths = [list(p) for p in cover.paths]
    on_cover = set(v for p in paths for v in p)
    plain = np.asarray(sorted(set(Y) - on_cover), dtype=np.int64)
    k = len(paths)
    flip = rng.random(k) < 0.5
    head = [p[-1] if not f else p[0] for p, f in zip(paths, flip)]
    tail = [p[0] if not f else p[-1] for p, f in zip(paths, flip)]
    local = np.full(g.n, -1, dtype=np.int64)
    local[plain] = np.arange(len(plain)) + k
    arcs = []
    # plain-plain edges, each oriented by a fair coin
    A = g.adjacency()[plain]
    rows = np.repeat(plain, np.diff(A.indptr))
    cols = A.indices.astype(np.int64)
    keep = (local[cols] >= 0) & (rows < cols)
    u, v = local[rows[keep]], local[cols[keep]]
    coin = rng.random(len(u)) < 0.5
    arcs.append(np.stack([np.where(coin, u, v), np.where(coin, v, u)], axis=1))
    head_of = np.full(g.n, -1, dtype=np.int64)
    tail_of = np.full(g.n, -1, dtype=np.int64)
    for i in range(k):
        head_of[head[i]] = i
        tail_of[tail[i]] = i
    for i in range(k):
        nh = g.neighbors(head[i])
        nt = g.neighbors(tail[i])
        # z_i -> z_j when head_i ~ tail_j; z_i -> v when head_i ~ v; v -> z_i when tail_i ~ v
        zj = tail_of[nh]
        arcs.append(np.stack([np.full((zj >= 0).sum(), i), zj[zj >= 0]], axis=1))
        pv = local[nh]
        arcs.append(np.stack([np.full((pv >= 0).sum(), i), pv[pv >= 0]], axis=1))
        pv = local[nt]
        arcs.append(np.stack([pv[pv >= 0], np.full((pv >= 0).sum(), i)], axis=1))
    arcs = np.concatenate(arcs) if arcs else np.zeros((0, 2), dtype=np.int64)
    return ContractedDigraph(k + len(plain), arcs, paths, head, tail, plain, seed)


# --- regular subdigraph -----------------------------------------------------

class RegularityFailure(RuntimeError):
    def __init__(self, round_: int, violator: list, factors: list):
        super().__init__(f"round {round_} has no perfect matching (Hall violator of size {len(violator)})")
        self.round = round_
        self.violator = violator
        self.factors = factors


@dataclass
class RegularSubdigraph:
    factors: list          # successor arrays, one per 1-factor

    @property
    def r(self) -> int:
        return len(self.factors)

    def digraph(self) -> Digraph:
        n = len(self.factors[0]) if self.factors else 0
        arcs = [(u, int(f[u])) for f in self.factors for u in range(n) if f[u] >= 0]
        return Digraph(n, arcs)


def _remaining_arcs(H: Digraph, factors: list) -> np.ndarray:
    rows = np.repeat(np.arange(H.n), H.out_degrees())
    a = np.stack([rows, H.indices], axis=1)
    if factors:
        used = np.zeros(len(a), dtype=bool)
        key = a[:, 0] * H.n + a[:, 1]
        for f in factors:
            ok = f >= 0
            fk = np.flatnonzero(ok) * H.n + f[ok]
            used |= np.isin(key, fk)
        a = a[~used]
    return a


def regular_subdigraph(H: Digraph, r: int) -> RegularSubdigraph:
    """r edge-disjoint 1-factors, one perfect matching of out-copies against
    in-copies per round."""
    factors: list = []
    for j in range(r):
        arcs = _remaining_arcs(H, factors)
        res = bipartite_matching(H.n, H.n, arcs)
        if not res.perfect:
            raise RegularityFailure(j, res.violator, factors)
        factors.append(res.match.copy())
    return RegularSubdigraph(factors)


def partial_factor(H: Digraph) -> np.ndarray:
    """A maximum set of arcs with out- and in-degree at most one."""
    arcs = _remaining_arcs(H, [])
    return bipartite_matching(H.n, H.n, arcs).match.copy()


# --- few paths from the factors ---------------------------------------------

def few_path_forest(R, n: int | None = None) -> list:
    """Stitch the components of the first factor into few directed paths.

    The first factor splits into directed cycles (and paths, if partial);
    each cycle is opened at its smallest vertex.  Then, repeatedly, the tail
    of a path is joined to the head of another path along an arc of any
    factor; a path that closes into a cycle of the first factor may be
    re-opened so that the arc's target becomes its head."""
    factors = R.factors if isinstance(R, RegularSubdigraph) else list(R)
    if n is None:
        n = len(factors[0])
    if n == 0:
        return []
    f0 = factors[0]
    pred = np.full(n, -1, dtype=np.int64)
    ok = f0 >= 0
    pred[f0[ok]] = np.flatnonzero(ok)
    seen = np.zeros(n, dtype=bool)
    paths: list = []
    closed: list = []
    # open paths of a partial factor start at vertices with no predecessor
    for s in np.flatnonzero(pred < 0).tolist():
        p = [s]
        seen[s] = True
        while f0[p[-1]] >= 0:
            p.append(int(f0[p[-1]]))
            seen[p[-1]] = True
        paths.append(p)
        closed.append(False)
    for s in range(n):
        if seen[s]:
            continue
        p = [s]
        seen[s] = True
        while not seen[f0[p[-1]]]:
            p.append(int(f0[p[-1]]))
            seen[p[-1]] = True
        paths.append(p)
        closed.append(True)
    owner = np.empty(n, dtype=np.int64)
    for i, p in enumerate(paths):
        owner[p] = i
    alive = [True] * len(paths)
    out_arcs = [[int(f[u]) for f in factors[1:] if f[u] >= 0] for u in range(n)] if len(factors) > 1 else None

    def succ_targets(t):
        extra = out_arcs[t] if out_arcs is not None else []
        return ([int(f0[t])] if f0[t] >= 0 else []) + extra

    changed = True
    while changed:
        changed = False
        for i in range(len(paths)):
            if not alive[i]:
                continue
            while True:
                t = paths[i][-1]
                joined = False
                for s in succ_targets(t):
                    j = int(owner[s])
                    if j == i or not alive[j]:
                        continue
                    q = paths[j]
                    if q[0] != s:
                        if not closed[j]:
                            continue
                        k = q.index(s)
                        q = q[k:] + q[:k]
                    paths[i] = paths[i] + q
                    owner[q] = i
                    alive[j] = False
                    paths[j] = []
                    closed[i] = False
                    joined = changed = True
                    break
                if not joined:
                    break
    return [p for p, a in zip(paths, alive) if a]


# --- rotation merging -------------------------------------------------------

def merge_paths(g: Graph, paths: list, X=(), cfg: ForestConfig | None = None,
                target_count: int = 1) -> list:
    """Merge paths of a linear forest by rotating each one (ends held in
    turn) until a free end is adjacent to a free end of another path.  New
    ends never enter X, so ends outside X stay outside X."""
    cfg = cfg or DESK.forest
    n = g.n
    Xm = mask(n, X)
    cap = cfg.merge_cap if cfg.merge_cap is not None else math.ceil(math.log2(max(n, 2)))
    paths = [list(p) for p in paths]
    while len(paths) > target_count:
        states = [PathState(p, n) for p in paths]
        tag = np.full(n, -1, dtype=np.int64)
        outs = {}
        for i, P in enumerate(states):
            for side, fixed in enumerate((P.first, P.last)):
                if side == 1 and len(P) == 1:
                    continue
                out = endpoint_expansion(g, P, fixed, avoid=Xm, cap=cap, target=cfg.merge_target)
                outs[(i, side)] = out
                free = [out.source.last] + out.endpoints
                free = np.asarray(free, dtype=np.int64)
                free = free[tag[free] < 0]
                tag[free] = 2 * i + side
        dirty: set = set()
        merged: list = []
        for (i, side), out in outs.items():
            if i in dirty:
                continue
            for e in [out.source.last] + out.endpoints:
                if Xm[e]:
                    continue
                nb = g.neighbors(e)
                t = tag[nb]
                hit = np.flatnonzero((t >= 0) & (t // 2 != i))
                hit = [h for h in hit.tolist() if int(t[h]) // 2 not in dirty]
                if not hit:
                    continue
                w = int(nb[hit[0]])
                j, sj = divmod(int(t[hit[0]]), 2)
                a = out.path(e).tolist()
                b = outs[(j, sj)].path(w).tolist()
                merged.append(a + b[::-1])
                dirty.update((i, j))
                break
        if not merged:
            break
        paths = [p for k, p in enumerate(paths) if k not in dirty] + merged
    return paths


# --- full pipeline ----------------------------------------------------------

def spanning_forest_good_endpoints(g: Graph, X, Y, delta: float, rng=None,
                                   cfg: ForestConfig | None = None,
                                   target_count: int = 1) -> LinearForest:
    """Spanning linear forest of G[Y] with all endpoints in Y minus X."""
    cfg = cfg or DESK.forest
    rng = np.random.default_rng(rng)
    info: dict = {}
    cover = cover_bad_set(g, X, Y, delta)
    info["cover_paths"] = cover.count
    H = contract_and_orient(g, Y, cover, rng)
    info["contracted_n"] = H.n
    if H.n == 0:
        return LinearForest([], info)
    try:
        R = regular_subdigraph(H, cfg.r)
    except RegularityFailure as exc:
        log.debug("regular subdigraph: %s", exc)
        R = RegularSubdigraph(exc.factors if exc.factors else [partial_factor(H)])
    info["r"] = R.r
    local_paths = few_path_forest(R, H.n)
    paths = [H.expand(p) for p in local_paths]
    info["factor_paths"] = len(paths)
    if cfg.merge and len(paths) > target_count:
        paths = merge_paths(g, paths, X, cfg, target_count)
    info["paths"] = len(paths)
    return LinearForest(paths, info)
