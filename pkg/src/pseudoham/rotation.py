"""Posa rotations: endpoint expansion, clean collections on paths, closing a
path into a cycle, and the rotation-based Hamilton cycle driver."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import DESK, RotationConfig, log2
from .graph import (Cycle, Graph, PathError, PathState, _nbr_pairs, components_on,
                    dif_fast, interior_mask, mask, runs_on, verify_cycle_on)

log = logging.getLogger(__name__)

INF = math.inf


class Stall(RuntimeError):
    """A stage could not make progress; carries whatever it had computed."""

    def __init__(self, stage: str, detail: str = "", partial=None):
        super().__init__(f"{stage}: {detail}" if detail else stage)
        self.stage = stage
        self.detail = detail
        self.partial = partial


def rotate(p: PathState, fixed: int, pivot: int, g: Graph | None = None) -> PathState:
    return p.rotate(fixed, pivot, g)


# --- endpoint expansion ----------------------------------------------------

@dataclass
class RotationOutcome:
    source: PathState             # oriented so that source.first is the fixed endpoint
    fixed: int
    endpoints: list               # new endpoints in discovery order (source.last excluded)
    witness: dict                 # endpoint -> ((pivot, new endpoint), ...)
    level_sizes: list             # cumulative endpoint count after each depth
    depth: int
    stalled: bool
    target: float
    hit: int | None = None        # endpoint that satisfied the stop predicate
    hypothesis: str = "n/a"       # robust-rotation hypothesis: verified, trusted or violated
    _paths: dict = field(default_factory=dict, repr=False)

    @property
    def endpoint_set(self) -> frozenset:
        return frozenset(self.endpoints)

    def replay(self, z: int, g: Graph | None = None) -> PathState:
        """Rebuild the path ending at ``z`` from its rotation script."""
        cur = self.source.copy()
        if z == self.source.last:
            return cur
        for pivot, new_end in self.witness[z]:
            j = int(cur.pos[pivot])
            if not 1 <= j <= len(cur) - 2:
                raise PathError(f"pivot {pivot} not interior during replay")
            if g is not None and not g.has_edge(cur.last, pivot):
                raise PathError(f"replay uses non-edge {cur.last}-{pivot}")
            cur._rotate_tail(j)
            if cur.last != new_end:
                raise PathError(f"replay reached {cur.last}, expected {new_end}")
        return cur

    def path(self, z: int) -> PathState:
        p = self._paths.get(z)
        return p if p is not None else self.replay(z)


def _pair(p: PathState, u: int) -> tuple:
    i = int(p.pos[u])
    a = int(p.order[i - 1]) if i > 0 else -1
    b = int(p.order[i + 1]) if i + 1 < len(p) else -1
    return (a, b) if a < b else (b, a)


def _hypothesis_status(g, base, cur, restrict_mask, delta) -> str:
    """Check that the damage between ``base`` and ``cur`` near the free end is small."""
    try:
        F = dif_fast(base, cur)
    except PathError:
        return "violated"
    if not F:
        return "verified"
    if len(F) > 32:
        log.debug("robust rotation hypothesis trusted (|dif| = %d)", len(F))
        return "trusted"
    damaged = interior_mask(base, restrict_mask) & ~interior_mask(cur, restrict_mask)
    radius = max(1, math.floor(2 * math.log2(max(len(F), 2))))
    near = g.bfs_distances(cur.last, radius)
    count = sum(1 for w in near if damaged[w])
    return "verified" if delta is None or count <= delta / 2 else "violated"


def endpoint_expansion(g: Graph, P: PathState, fixed: int, *, restrict=None, avoid=None,
                       base: PathState | None = None, damage=None, cap: int | None = None,
                       target: float | None = None, delta: float | None = None, stop=None,
                       keep_paths: bool = True, visit=None) -> RotationOutcome:
    """Breadth-first search over the endpoints reachable by rotations with
    ``fixed`` held in place.

    With ``restrict`` every pivot must be an interior vertex of the restrict
    set on the current path (so new endpoints stay inside it).  ``avoid``
    bans new endpoints; ``visit(endpoint, path)`` sees every new path.
    ``damage`` is a vertex set Y; a path is only kept
    if it differs from ``P`` on at most 3*log2|Y| vertices of Y.  The search
    stops when ``target`` endpoints are known, when ``stop(endpoint)`` is
    true, or at depth ``cap``.  Pivots are tried in increasing vertex order.
    """
    src = P.oriented_from(fixed)
    src = src.copy() if src is P else src
    n, l = g.n, len(src)
    if cap is None:
        cap = math.ceil(log2(n))
    d = g.regular_degree if g.regular_degree else g.mean_degree
    if target is None:
        if restrict is not None:
            dl = delta if delta is not None else d / 100
            target = max(1, math.ceil(dl * n / (200 * d)))
        else:
            target = max(1, math.ceil(n / 100))
    xm = None
    if restrict is not None:
        xm = restrict if isinstance(restrict, np.ndarray) else mask(n, restrict)
    am = None
    if avoid is not None:
        am = avoid if isinstance(avoid, np.ndarray) else mask(n, avoid)
    ym, budget, sa0, sa1 = None, 0.0, None, None
    if damage is not None:
        Y = frozenset(damage)
        ym = mask(n, Y)
        budget = 3 * math.log2(len(Y)) if len(Y) > 1 else 0.0
        sa0, sa1 = _nbr_pairs(src)
    hyp = "n/a"
    if base is not None and xm is not None and not np.array_equal(base.order, src.order) \
            and not np.array_equal(base.order, src.order[::-1]):
        hyp = _hypothesis_status(g, base, src, xm, delta)

    start = src.last
    witness = {start: ()}
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    endpoints: list = []
    paths: dict = {}
    frontier = [(start, src, frozenset())]
    level_sizes: list = []
    depth = 0
    hit = None
    if stop is not None and stop(start):
        hit = start
    while frontier and depth < cap and len(endpoints) < target and hit is None:
        depth += 1
        nxt = []
        for z, Q, D in frontier:
            qo, qp = Q.order, Q.pos
            nb = g.neighbors(z)
            js = qp[nb]
            ok = (js >= 1) & (js <= l - 3)
            vs, js = nb[ok], js[ok]
            ws = qo[js + 1]
            keep = ~seen[ws]
            if xm is not None:
                keep &= xm[vs] & xm[qo[js - 1]] & xm[ws]
            if am is not None:
                keep &= ~am[ws]
            for v, j, w in zip(vs[keep].tolist(), js[keep].tolist(), ws[keep].tolist()):
                if seen[w]:
                    continue
                R = Q.copy()
                R._rotate_tail(j)
                D2 = D
                if ym is not None:
                    D2 = set(D)
                    for u in (v, w, z):
                        if _pair(R, u) == (int(sa0[u]), int(sa1[u])):
                            D2.discard(u)
                        else:
                            D2.add(u)
                    D2 = frozenset(D2)
                    if sum(1 for u in D2 if ym[u]) > budget:
                        continue
                witness[w] = witness[z] + ((v, w),)
                seen[w] = True
                endpoints.append(w)
                nxt.append((w, R, D2))
                if keep_paths:
                    paths[w] = R
                if visit is not None:
                    visit(w, R)
                if stop is not None and stop(w):
                    hit = w
                    break
                if len(endpoints) >= target:
                    break
            if hit is not None or len(endpoints) >= target:
                break
        level_sizes.append(len(endpoints))
        frontier = nxt
        if not keep_paths:
            paths = {w: R for w, R, _ in nxt}
    if stop is not None:
        stalled = hit is None
    else:
        stalled = len(endpoints) < target
    witness.pop(start)
    return RotationOutcome(src, fixed, endpoints, witness, level_sizes, depth, stalled, target,
                           hit, hyp, paths)


@dataclass
class Landing:
    path: PathState               # oriented fixed-first, new endpoint last
    endpoint: int
    rotations: int
    outcome: RotationOutcome | None


def rotate_into_set(g: Graph, P: PathState, fixed: int, R, *, cap: int | None = None) -> Landing:
    """Rotate with ``fixed`` held until the free endpoint lies in ``R``.

    The first endpoint found in ``R`` is taken, so every earlier endpoint on
    its rotation script lies outside ``R`` and the interior of ``R`` loses at
    most three vertices.
    """
    Rm = mask(g.n, R)
    src = P.oriented_from(fixed)
    if Rm[src.last]:
        return Landing(src, src.last, 0, None)
    out = endpoint_expansion(g, src, fixed, cap=cap, target=INF, stop=lambda w: bool(Rm[w]),
                             keep_paths=False)
    if out.hit is None:
        raise Stall("rotate-into-set", f"no endpoint reached the set within depth {out.depth}", out)
    return Landing(out.path(out.hit), out.hit, len(out.witness[out.hit]), out)


# --- clean collections -----------------------------------------------------

class CollectionFailure(RuntimeError):
    def __init__(self, survivors: int, needed: int):
        super().__init__(f"only {survivors} of the {needed} required intervals survived cleaning")
        self.survivors = survivors
        self.needed = needed


@dataclass
class CleanCollection:
    intervals: list       # surviving subpaths, each a tuple of vertices in path order
    S: frozenset
    delta: float
    gamma: float
    k: int
    r: int                # intervals the path was first cut into
    removed: int          # vertices removed from S by the process


def clean_partition(g: Graph, P: PathState, k: int, delta: float, gamma: float) -> CleanCollection:
    """Cut ``P`` into ceil(1.01 k) equal subpaths and run the three-rule
    deletion process (sparse interval, low interior degree, poorly spread
    neighbourhood) until it stabilises."""
    n = g.n
    o = P.order
    L = len(o)
    r = math.ceil(1.01 * k)
    if L < r:
        raise CollectionFailure(0, k)
    chunks = np.array_split(np.arange(L), r)
    iv_of = np.full(n, -1, dtype=np.int64)
    for j, c in enumerate(chunks):
        iv_of[o[c]] = j
    sizes = np.array([len(c) for c in chunks])
    inS = np.zeros(n, dtype=bool)
    inS[o] = True
    count = sizes.copy()
    alive = np.ones(r, dtype=bool)

    prev = np.full(n, -1, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)
    prev[o[1:]] = o[:-1]
    nxt[o[:-1]] = o[1:]

    def status(w):
        p, q = prev[w], nxt[w]
        if p < 0 or q < 0 or not (inS[w] and inS[p] and inS[q]):
            return False, False
        return True, bool(iv_of[p] == iv_of[w] == iv_of[q])

    int_s = np.zeros(n, dtype=bool)
    int_j = np.zeros(n, dtype=bool)
    for w in o.tolist():
        int_s[w], int_j[w] = status(w)
    A = g.adjacency()
    cnt = np.asarray(A @ int_s.astype(np.float64)).round().astype(np.int64)
    onehot = np.zeros((n, r))
    sel = np.flatnonzero(int_j)
    onehot[sel, iv_of[sel]] = 1.0
    cnt_j = np.asarray(A @ onehot).round().astype(np.int64)
    thr_j = delta / k
    good = (cnt_j >= thr_j).sum(axis=1)
    need_good = gamma * r

    removed = 0

    def remove(u):
        nonlocal removed
        inS[u] = False
        count[iv_of[u]] -= 1
        removed += 1
        for w in (u, prev[u], nxt[u]):
            if w < 0:
                continue
            s_new, j_new = status(w)
            if int_s[w] and not s_new:
                int_s[w] = False
                cnt[g.neighbors(w)] -= 1
            if int_j[w] and not j_new:
                int_j[w] = False
                idx = g.neighbors(w)
                col = iv_of[w]
                before = cnt_j[idx, col]
                cnt_j[idx, col] = before - 1
                crossed = (before >= thr_j) & (before - 1 < thr_j)
                good[idx[crossed]] -= 1

    while True:
        sparse = np.flatnonzero(alive & (count < 0.99 * sizes))
        if sparse.size:
            j = int(sparse[0])
            alive[j] = False
            for u in o[chunks[j]].tolist():
                if inS[u]:
                    remove(u)
            continue
        low = np.flatnonzero(inS & (cnt < delta))
        if low.size:
            remove(int(low[0]))
            continue
        spread = np.flatnonzero(inS & (good < need_good))
        if spread.size:
            remove(int(spread[0]))
            continue
        break
    survivors = [j for j in range(r) if alive[j]]
    if len(survivors) < k:
        raise CollectionFailure(len(survivors), k)
    intervals = [tuple(o[chunks[j]].tolist()) for j in survivors]
    S = frozenset(np.flatnonzero(inS).tolist())
    return CleanCollection(intervals, S, delta, gamma, k, r, removed)


def path_clean(g: Graph, P: PathState, A, threshold: float) -> frozenset:
    """Delete vertices of ``A`` with fewer than ``threshold`` neighbours in the
    path-interior of what is left, lowest index first."""
    n = g.n
    inA = mask(n, A)
    prev = np.full(n, -1, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)
    o = P.order
    prev[o[1:]] = o[:-1]
    nxt[o[:-1]] = o[1:]
    ints = interior_mask(P, inA)
    cnt = np.asarray(g.adjacency() @ ints.astype(np.float64)).round().astype(np.int64)
    while True:
        low = np.flatnonzero(inA & (cnt < threshold))
        if low.size == 0:
            break
        u = int(low[0])
        inA[u] = False
        for w in (u, prev[u], nxt[u]):
            if w >= 0 and ints[w]:
                p, q = prev[w], nxt[w]
                if not (inA[w] and p >= 0 and q >= 0 and inA[p] and inA[q]):
                    ints[w] = False
                    cnt[g.neighbors(w)] -= 1
    return frozenset(np.flatnonzero(inA).tolist())


# --- closing ---------------------------------------------------------------

def _cycle_from(path: PathState) -> Cycle:
    return Cycle(path.order.tolist())


def close_path(g: Graph, P: PathState, A, B, A_clean=None, B_clean=None, *,
               target: float | None = None, cap: int | None = None) -> Cycle:
    """Close ``P`` into a cycle on its own vertex set.

    Endpoint ``x`` must lie in ``A_clean`` and ``y`` in ``B_clean``.  Rotations
    inside ``A_clean`` (``y`` fixed) give candidate endpoints ``z``; these are
    grouped by the direction in which each run of ``B`` is traversed, and one
    group is kept.  Rotations inside ``B_clean`` from one member of the group
    give endpoints ``w``; an edge ``zw`` between the two lists closes the path,
    after replaying the ``B``-side script on the path that ends at ``z``.
    """
    A, B = frozenset(A), frozenset(B)
    if A & B:
        raise ValueError("A and B must be disjoint")
    A1 = frozenset(A_clean) if A_clean is not None else A
    B1 = frozenset(B_clean) if B_clean is not None else B
    if not (A1 <= A and B1 <= B):
        raise ValueError("clean subsets must lie inside A and B")
    if P.first in B1 and P.last in A1:
        P = P.reversed()
    if P.first not in A1 or P.last not in B1:
        raise ValueError("endpoints must lie in the clean subsets")
    if len(P) >= 3 and g.has_edge(P.first, P.last):
        return _cycle_from(P)
    if components_on(P, A) < components_on(P, B):
        P, A, B, A1, B1 = P.reversed(), B, A, B1, A1
    x, y = P.first, P.last
    if target is None:
        target = INF

    out1 = endpoint_expansion(g, P, y, restrict=A1, cap=cap, target=target)
    src = out1.source                       # y first, x last
    Z = [x] + out1.endpoints
    # one representative edge per run of B: (vertex before the run, first vertex of the run)
    bmask = mask(g.n, B)
    probes = [(int(src.order[s - 1]), int(src.order[s])) for s, _ in runs_on(src, bmask) if s > 0]
    classes: dict = {}
    for z in Z:
        pz = out1.path(z)
        sig = tuple(bool(pz.pos[p] < pz.pos[u]) for p, u in probes)
        classes.setdefault(sig, []).append(z)
    best = max(classes.values(), key=len)
    best_set = set(best)
    z0 = best[0]
    pz0 = out1.path(z0)
    out2 = endpoint_expansion(g, pz0, z0, restrict=B1, cap=cap, target=target)
    W = [y] + out2.endpoints
    order_of = {z: i for i, z in enumerate(best)}
    for w in W:
        common = g.nbr_set(w) & best_set
        for z in sorted(common, key=order_of.__getitem__):
            path = out1.path(z).oriented_from(z).copy()
            try:
                for pivot, new_end in (out2.witness[w] if w != y else ()):
                    j = int(path.pos[pivot])
                    if not 1 <= j <= len(path) - 2 or not g.has_edge(path.last, pivot):
                        raise PathError("script does not transfer")
                    path._rotate_tail(j)
                    if path.last != new_end:
                        raise PathError("script does not transfer")
            except PathError:
                continue
            cyc = _cycle_from(path)
            if verify_cycle_on(g, cyc, P.vertices):
                return cyc
    raise Stall("close-path", f"no edge between {len(best)} and {len(W)} endpoints",
                {"Z": len(Z), "class": len(best), "W": len(W)})


# --- extension -------------------------------------------------------------

def extend_path(g: Graph, P: PathState, rng=None) -> PathState | None:
    """Greedily append off-path neighbours at both ends until neither end has
    one.  If nothing can be appended but the path closes into a cycle that
    misses some vertex, reopen the cycle next to an outside neighbour.
    Returns ``None`` when no longer path was produced."""
    n = g.n
    on = P.pos >= 0 if len(P.pos) == n else mask(n, P)
    left = P.order.tolist()[::-1]         # reversed prefix, so both ends grow by append
    right: list = []

    def pick(v):
        nb = g.neighbors(v)
        c = nb[~on[nb]]
        if c.size == 0:
            return None
        return int(c[rng.integers(c.size)]) if rng is not None else int(c[0])

    grew = False
    for side in (right, left):
        while True:
            end = side[-1] if side else (left[0] if side is right else None)
            if end is None:
                break
            w = pick(end)
            if w is None:
                break
            side.append(w)
            on[w] = True
            grew = True
    order = left[::-1] + right
    if grew:
        return PathState(order, n)
    if 3 <= len(order) < n and g.has_edge(order[0], order[-1]):
        for i, u in enumerate(order):
            w = pick(u)
            if w is not None:
                reopened = PathState([w] + order[i:] + order[:i], n)
                return extend_path(g, reopened, rng) or reopened
    return None


def extend_to_fixpoint(g: Graph, P: PathState, rng=None) -> PathState:
    while True:
        nxt = extend_path(g, P, rng)
        if nxt is None:
            return P
        P = nxt


def posa_extend(g: Graph, P: PathState, cap: int | None = None, rng=None) -> PathState | None:
    """Rotate either end until some endpoint has a neighbour off the path,
    then extend.  ``None`` if the path is rotation-maximal."""
    on = P.pos >= 0

    def has_off(w):
        return bool((~on[g.neighbors(w)]).any())

    for fixed in (P.first, P.last):
        out = endpoint_expansion(g, P, fixed, cap=cap if cap is not None else g.n, target=INF,
                                 stop=has_off, keep_paths=False)
        if out.hit is not None:
            return extend_to_fixpoint(g, out.path(out.hit), rng)
    return None


def lollipop(g: Graph, path: PathState) -> Cycle | None:
    """The longest cycle formed by one endpoint of ``path`` and the subpath
    up to its farthest path neighbour."""
    best = None
    for p in (path, path.reversed()):
        js = p.pos[g.neighbors(p.last)]
        js = js[js >= 0]
        if js.size:
            j = int(js.min())
            if len(p) - j >= 3 and (best is None or len(p) - j > len(best)):
                best = Cycle(p.order[j:].tolist())
    return best


class _Longest:
    def __init__(self, g):
        self.g = g
        self.cycle = None

    def __call__(self, _w, path):
        c = lollipop(self.g, path)
        if c is not None and (self.cycle is None or len(c) > len(self.cycle)):
            self.cycle = c


def posa_close(g: Graph, P: PathState, cap: int | None = None, breadth: int | None = None,
               longest: _Longest | None = None) -> Cycle | None:
    """Plain rotation closing: rotate with ``y`` fixed looking for an endpoint
    adjacent to ``y``; failing that, from each such endpoint ``z`` rotate with
    ``z`` fixed looking for an endpoint adjacent to ``z``.  ``longest``, if
    given, records the longest non-spanning cycle seen along the way."""
    if len(P) < 3:
        return None
    cap = cap if cap is not None else g.n
    x, y = P.first, P.last
    if g.has_edge(x, y):
        return _cycle_from(P)
    if longest is not None:
        longest(None, P)
    out1 = endpoint_expansion(g, P, y, cap=cap, target=INF, stop=lambda z: g.has_edge(z, y),
                              keep_paths=False, visit=longest)
    if out1.hit is not None:
        return _cycle_from(out1.path(out1.hit))
    starts = [x] + out1.endpoints
    if breadth is not None:
        starts = starts[:breadth]
    for z in starts:
        pz = out1.replay(z)
        out2 = endpoint_expansion(g, pz, z, cap=cap, target=INF,
                                  stop=lambda w, z=z: g.has_edge(w, z), keep_paths=False,
                                  visit=longest)
        if out2.hit is not None:
            return _cycle_from(out2.path(out2.hit))
    return None


# --- the clean-collection closing pipeline ---------------------------------

def _land_in_other_half(g, P, S, cfg, cap, n):
    """Rotate both endpoints into the two clean sets, one in each."""
    R = S[0] | S[1]
    first = rotate_into_set(g, P, P.last, R, cap=cap)
    xp = first.endpoint
    a = 0 if xp in S[0] else 1
    b = 1 - a
    second = rotate_into_set(g, first.path, xp, R, cap=cap)
    if second.endpoint in S[b]:
        return second.path, a, b
    # the free end landed on the same side: rotate it inside S_a until it sees int(S_b)
    path = second.path
    ints_b = interior_mask(path, mask(g.n, S[b]))
    radius = max(1, math.floor(2 * math.log2(max(log2(n), 2))))
    near = g.bfs_distances(xp, radius)
    Y = [v for v in near if v in S[a]]
    out = endpoint_expansion(g, path, xp, restrict=S[a], damage=Y, cap=cap,
                             target=cfg.restricted_target_for(n, 1.0) * 4,
                             stop=lambda w: bool(ints_b[g.neighbors(w)].any()), keep_paths=False)
    if out.hit is None:
        raise Stall("land-endpoints", "free end cannot reach the other clean set", out)
    pw = out.path(out.hit)
    for v in g.neighbors(out.hit).tolist():
        j = int(pw.pos[v])
        if ints_b[v] and 1 <= j <= len(pw) - 3 and pw.order[j + 1] in S[b]:
            return pw.rotate(xp, v, g), a, b
    raise Stall("land-endpoints", "no usable pivot in the other clean set")


def _choose_windows(path: PathState, intervals, per_window: int):
    parts = []
    for q in intervals:
        runs = runs_on(path, mask(path.n, q))
        for s, e in runs:
            parts.append((s, e, len(runs) == 1))
    parts.sort()
    L = len(path)
    need = math.ceil(per_window / 2)
    chosen = []
    i = 0
    while i + per_window <= len(parts) and len(chosen) < 2:
        win = parts[i:i + per_window]
        s, e = win[0][0], win[-1][1]
        if s > 0 and e < L - 1 and sum(1 for p in win if p[2]) >= need:
            chosen.append((s, e))
            i += per_window
        else:
            i += 1
    if len(chosen) < 2:
        raise Stall("choose-subpaths", f"{len(chosen)} usable windows of {per_window} parts")
    (s1, e1), (s2, e2) = chosen
    return (frozenset(path.order[s1:e1 + 1].tolist()), frozenset(path.order[s2:e2 + 1].tolist()))


def _rotate_to_clean(g, path, fixed, X, target_clean, cap, target, base=None):
    """Rotate inside X (``fixed`` held) to an endpoint adjacent to the interior
    of ``target_clean``; one more rotation puts the endpoint into it."""
    intc = interior_mask(path, mask(g.n, target_clean))
    out = endpoint_expansion(g, path, fixed, restrict=X, base=base, cap=cap, target=target,
                             stop=lambda w: bool(intc[g.neighbors(w)].any()), keep_paths=False)
    if out.hit is None:
        raise Stall("rotate-to-clean", f"{len(out.endpoints)} endpoints, none adjacent", out)
    pw = out.path(out.hit)
    tm = mask(g.n, target_clean)
    for v in g.neighbors(out.hit).tolist():
        j = int(pw.pos[v])
        if intc[v] and 1 <= j <= len(pw) - 3 and tm[pw.order[j + 1]]:
            return pw.rotate(fixed, v, g)
    raise Stall("rotate-to-clean", "no usable pivot")


def robust_close(g: Graph, P: PathState, cfg: RotationConfig, d: float | None = None) -> tuple:
    """Close a path using two clean collections, two chosen subpaths and the
    direction-class closing step.  Returns the cycle and a stage log."""
    n = g.n
    if d is None:
        d = g.regular_degree if g.regular_degree else g.mean_degree
    cap = cfg.cap_for(n)
    k, gamma = cfg.k_for(n), cfg.gamma_for(n)
    delta = cfg.delta_frac * d
    target = cfg.restricted_target_for(n, d)
    info: dict = {}
    L = len(P)
    half = L // 2
    try:
        cols = [clean_partition(g, P.subpath(0, half - 1), k, delta, gamma),
                clean_partition(g, P.subpath(half, L - 1), k, delta, gamma)]
    except CollectionFailure as exc:
        raise Stall("clean-collection", str(exc)) from None
    S = (cols[0].S, cols[1].S)
    info["clean_removed"] = cols[0].removed + cols[1].removed
    Pp, a, b = _land_in_other_half(g, P, S, cfg, cap, n)
    info["dif_landing"] = len(dif_fast(P, Pp))
    per_window = max(1, round(gamma * k / 4))
    A, B = _choose_windows(Pp, cols[a].intervals + cols[b].intervals, per_window)
    A1 = path_clean(g, Pp, A, cfg.path_clean_frac * d * len(A) / n)
    B1 = path_clean(g, Pp, B, cfg.path_clean_frac * d * len(B) / n)
    if not A1 or not B1:
        raise Stall("clean-subpaths", "a chosen subpath cleaned away")
    info["A"], info["B"] = len(A), len(B)
    Xa = S[a] - A - B
    Xb = S[b] - A - B
    yp = Pp.last
    Pa = _rotate_to_clean(g, Pp, yp, Xa, A1, cap, target, base=P)      # y' first, x'' last
    x2 = Pa.last
    Pb = _rotate_to_clean(g, Pa, x2, Xb, B1, cap, target)              # x'' first, y'' last
    info["c_A"], info["c_B"] = components_on(Pb, A), components_on(Pb, B)
    cyc = close_path(g, Pb, A, B, A1, B1, target=cfg.close_target_for(n, d), cap=cap)
    return cyc, info


# --- driver ----------------------------------------------------------------

def articulation_points(g: Graph) -> list:
    n = g.n
    disc = [-1] * n
    low = [0] * n
    out = set()
    t = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = t
        t += 1
        children = 0
        stack = [(root, -1, iter(g.neighbors(root).tolist()))]
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for w in it:
                if disc[w] < 0:
                    disc[w] = low[w] = t
                    t += 1
                    if v == root:
                        children += 1
                    stack.append((w, v, iter(g.neighbors(w).tolist())))
                    advanced = True
                    break
                if w != parent:
                    low[v] = min(low[v], disc[w])
            if not advanced:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if u != root and low[v] >= disc[u]:
                        out.add(u)
        if children > 1:
            out.add(root)
    return sorted(out)


def obstruction(g: Graph, cut_limit: int = 100_000) -> str | None:
    """A cheap certificate that ``g`` has no Hamilton cycle, if one applies.

    The cut-vertex search is a Python-level DFS, so it is skipped on graphs
    with more than ``cut_limit`` edges."""
    n = g.n
    if n < 3:
        return "fewer than three vertices"
    if not g.is_connected():
        return "disconnected"
    if int(g.degree.min()) < 2:
        return f"vertex {int(np.argmin(g.degree))} has degree below 2"
    cut = articulation_points(g) if g.m <= cut_limit else []
    if cut:
        return f"cut vertex {cut[0]}"
    side = np.full(n, -1)
    side[0] = 0
    queue = [0]
    bipartite = True
    while queue and bipartite:
        v = queue.pop()
        for w in g.neighbors(v).tolist():
            if side[w] < 0:
                side[w] = 1 - side[v]
                queue.append(w)
            elif side[w] == side[v]:
                bipartite = False
                break
    if bipartite and int(side.sum()) * 2 != n:
        return "bipartite with unequal sides"
    return None


@dataclass
class HamResult:
    success: bool
    cycle: Cycle | None
    longest: Cycle | None
    strategy: str
    attempts: int = 0
    stages: dict = field(default_factory=dict)
    failure: str | None = None
    notes: list = field(default_factory=list)

    @property
    def longest_len(self) -> int:
        return len(self.longest) if self.longest is not None else 0

    def stage(self, name: str, ms: float, ok: bool | None = None) -> None:
        s = self.stages.setdefault(name, {"calls": 0, "ms": 0.0, "ok": 0})
        s["calls"] += 1
        s["ms"] += ms
        if ok:
            s["ok"] += 1

    def offer(self, c: Cycle) -> None:
        if self.longest is None or len(c) > len(self.longest):
            self.longest = c


def _reopen(g: Graph, c: Cycle) -> PathState | None:
    order = list(c.order)
    on = mask(g.n, order)
    for i, u in enumerate(order):
        nb = g.neighbors(u)
        off = nb[~on[nb]]
        if off.size:
            return PathState([int(off[0])] + order[i:] + order[:i], g.n)
    return None


def _ms(t0):
    return (time.perf_counter() - t0) * 1000.0


def hamilton_rotation(g: Graph, cert=None, cfg: RotationConfig | None = None, seed=0,
                      retries: int | None = None, time_budget: float | None = None) -> HamResult:
    """Grow a maximal path, close it into a cycle, reopen the cycle at an
    outside neighbour and repeat until the cycle is spanning.

    Closing first tries the clean-collection pipeline (long paths only) and
    falls back to plain two-phase rotation.  Every emitted cycle is verified.
    """
    cfg = cfg or DESK.rotation
    retries = cfg.retries if retries is None else retries
    res = HamResult(False, None, None, "rotation")
    n = g.n
    blocked = obstruction(g)
    if blocked:
        res.failure = f"obstruction: {blocked}"
        return res
    d = cert.d if cert is not None else (g.regular_degree or g.mean_degree)
    deadline = None if time_budget is None else time.perf_counter() + time_budget
    for attempt in range(retries):
        if deadline is not None and time.perf_counter() > deadline:
            res.notes.append("time budget exhausted")
            break
        res.attempts = attempt + 1
        rng = np.random.default_rng([int(seed), attempt])
        t0 = time.perf_counter()
        P = extend_to_fixpoint(g, PathState([int(rng.integers(n))], n), rng)
        res.stage("grow", _ms(t0))
        for _ in range(4 * n):
            t0 = time.perf_counter()
            longer = posa_extend(g, P, cfg.posa_depth_cap, rng)
            res.stage("extend", _ms(t0), longer is not None)
            if longer is not None:
                P = longer
                continue
            cyc = None
            if cfg.robust and len(P) >= max(cfg.robust_min_n, 16):
                t0 = time.perf_counter()
                try:
                    cyc, _info = robust_close(g, P, cfg, d)
                    res.stage("robust-close", _ms(t0), True)
                except Stall as exc:
                    res.stage("robust-close", _ms(t0), False)
                    res.stage(f"stall:{exc.stage}", 0.0)
            if cyc is None:
                t0 = time.perf_counter()
                partial = _Longest(g)
                cyc = posa_close(g, P, cfg.posa_depth_cap, cfg.posa_breadth, partial)
                res.stage("posa-close", _ms(t0), cyc is not None)
                if cyc is None and partial.cycle is not None:
                    res.offer(partial.cycle)
            if cyc is None:
                break
            check = verify_cycle_on(g, cyc, P.vertices)
            if not check:
                raise AssertionError(f"internal error: closing produced an invalid cycle ({check.reason})")
            res.offer(cyc)
            if len(cyc) == n:
                res.success = True
                res.cycle = cyc
                return res
            P = extend_to_fixpoint(g, _reopen(g, cyc), rng)
    res.failure = "no spanning cycle within the retry budget"
    return res
