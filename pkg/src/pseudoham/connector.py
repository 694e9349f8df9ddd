"""Alternating paths through a set of vertex pairs.

A pair list M holds disjoint pairs {x, y} (x = y allowed).  A path is
M-alternating when its steps alternate between host-graph edges and pair
steps, a pair step being either the pair {x, y} itself or a lone vertex x of
a pair {x, x}.  Paths are found in a random auxiliary digraph on one vertex
per pair: long ones by depth-first search, and vertex-disjoint connections by
growing out-trees under a goodness invariant that is rolled back after each
connection.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .config import ConnectorConfig, DESK
from .graph import Graph

log = logging.getLogger(__name__)


class PairListError(ValueError):
    pass


class PairList:
    """Disjoint vertex pairs; a pair may repeat its vertex."""

    def __init__(self, pairs):
        self.pairs = [(int(a), int(b)) for a, b in pairs]
        self.partner: dict = {}
        self.index: dict = {}
        for i, (a, b) in enumerate(self.pairs):
            for v in {a, b}:
                if v in self.partner:
                    raise PairListError(f"vertex {v} appears in two pairs")
                self.partner[v] = b if v == a else a
                self.index[v] = i

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    @property
    def vertices(self) -> frozenset:
        return frozenset(self.partner)

    def subset(self, idx) -> "PairList":
        return PairList([self.pairs[i] for i in idx])


class Digraph:
    """Directed graph in CSR form with a reverse index."""

    def __init__(self, n: int, arcs):
        a = np.asarray(arcs, dtype=np.int64).reshape(-1, 2)
        if len(a) and (a.min() < 0 or a.max() >= n):
            raise ValueError("arc endpoint out of range")
        a = a[a[:, 0] != a[:, 1]]
        m = sp.csr_matrix((np.ones(len(a), dtype=np.int8), (a[:, 0], a[:, 1])), shape=(n, n))
        m.sum_duplicates()
        m.sort_indices()
        t = m.T.tocsr()
        t.sort_indices()
        self.n = n
        self.indptr, self.indices = m.indptr, m.indices.astype(np.int64)
        self.rindptr, self.rindices = t.indptr, t.indices.astype(np.int64)

    @property
    def m(self) -> int:
        return len(self.indices)

    def out(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def inn(self, v: int) -> np.ndarray:
        return self.rindices[self.rindptr[v]:self.rindptr[v + 1]]

    def has_arc(self, u: int, v: int) -> bool:
        o = self.out(u)
        i = np.searchsorted(o, v)
        return bool(i < len(o) and o[i] == v)

    def arcs(self) -> list:
        return [(u, int(v)) for u in range(self.n) for v in self.out(u)]

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def in_degrees(self) -> np.ndarray:
        return np.diff(self.rindptr)

    def out_set(self, vs) -> set:
        s: set = set()
        for v in vs:
            s.update(self.out(v).tolist())
        return s


class AuxDigraph(Digraph):
    """Auxiliary digraph of a pair list.

    Local vertex i < len(M) stands for the red vertex of pair i; the rest are
    the extra host vertices in ``scope``.  Arcs run u -> i whenever the host
    vertex of u is adjacent to the blue vertex of pair i.
    """

    def __init__(self, g: Graph, M: PairList, red: np.ndarray, blue: np.ndarray, extra,
                 seed=None):
        k = len(M)
        self.pairs = M
        self.red = red
        self.blue = blue
        self.extra = np.asarray(sorted(extra), dtype=np.int64)
        self.host = np.concatenate([red, self.extra]).astype(np.int64)
        self.local = np.full(g.n, -1, dtype=np.int64)
        self.local[self.host] = np.arange(len(self.host))
        self.seed = seed
        blue_pair = np.full(g.n, -1, dtype=np.int64)
        blue_pair[blue] = np.arange(k)
        A = g.adjacency()[self.host]
        rows = np.repeat(np.arange(len(self.host)), np.diff(A.indptr))
        tgt = blue_pair[A.indices]
        keep = (tgt >= 0) & (tgt != rows)
        super().__init__(len(self.host), np.stack([rows[keep], tgt[keep]], axis=1))

    @property
    def k(self) -> int:
        return len(self.pairs)

    def is_red(self, u: int) -> bool:
        return u < self.k

    def lift(self, chain) -> list:
        """Host vertices of a directed path of red vertices: y x y x ..."""
        out = []
        for u in chain:
            x, y = int(self.red[u]), int(self.blue[u])
            out.extend([x] if x == y else [y, x])
        return out


def build_aux(g: Graph, M: PairList, scope=None, rng=None, *, colouring=None) -> AuxDigraph:
    """Colour each pair red/blue at random and build the auxiliary digraph.

    ``scope`` lists the extra (non-pair) host vertices to include; by default
    every vertex outside the pairs.  ``colouring[i]`` true makes the first
    vertex of pair i red, overriding the random choice."""
    if not isinstance(M, PairList):
        M = PairList(M)
    seed = None
    if colouring is None:
        if not isinstance(rng, np.random.Generator):
            seed = rng
            rng = np.random.default_rng(rng)
        colouring = rng.random(len(M)) < 0.5
    colouring = np.asarray(colouring, dtype=bool)
    a = np.asarray([p[0] for p in M.pairs], dtype=np.int64)
    b = np.asarray([p[1] for p in M.pairs], dtype=np.int64)
    red = np.where(colouring, a, b) if len(M) else a
    blue = np.where(colouring, b, a) if len(M) else b
    pv = M.vertices
    if scope is None:
        extra = [v for v in range(g.n) if v not in pv]
    else:
        extra = sorted(set(int(v) for v in scope))
        if pv & set(extra):
            raise PairListError("scope vertices must lie outside the pairs")
    return AuxDigraph(g, M, red, blue, extra, seed)


# --- long paths -------------------------------------------------------------

def dfs_long_path(H: Digraph, vertices=None) -> list:
    """Depth-first search keeping the current stack as a directed path.

    If every two disjoint k-sets S, T have an arc from S to T, the longest
    stack seen has at least n - 2k + 1 vertices.  Only ``vertices`` (default
    all) are explored; out-neighbours are tried in increasing order."""
    n = H.n
    allowed = np.ones(n, dtype=bool) if vertices is None else np.zeros(n, dtype=bool)
    if vertices is not None:
        allowed[np.asarray(list(vertices), dtype=np.int64)] = True
    unvisited = allowed.copy()
    ptr = H.indptr[:-1].copy()
    end = H.indptr[1:]
    stack: list = []
    best: list = []
    nxt = 0
    while True:
        if not stack:
            while nxt < n and not unvisited[nxt]:
                nxt += 1
            if nxt == n:
                break
            stack.append(nxt)
            unvisited[nxt] = False
        v = stack[-1]
        pushed = False
        while ptr[v] < end[v]:
            w = int(H.indices[ptr[v]])
            ptr[v] += 1
            if unvisited[w]:
                unvisited[w] = False
                stack.append(w)
                pushed = True
                break
        if not pushed:
            # the stack peaks right before a pop, so saving here sees every maximum
            if len(stack) > len(best):
                best = list(stack)
            stack.pop()
    return best


def arc_between_sets(H: Digraph, k: int, rng, samples: int = 1000) -> float:
    """Fraction of random disjoint k-set pairs (S, T) with an arc S -> T."""
    rng = np.random.default_rng(rng)
    if 2 * k > H.n:
        return 0.0
    hits = 0
    for _ in range(samples):
        pick = rng.choice(H.n, size=2 * k, replace=False)
        S, T = pick[:k], set(pick[k:].tolist())
        if any(int(w) in T for v in S.tolist() for w in H.out(v)):
            hits += 1
    return hits / samples


@dataclass
class AlternatingPath:
    vertices: list
    pairs: list          # indices into M, in path order


def alt_path_spanning(g: Graph, M: PairList, rng=None, *, H: AuxDigraph | None = None) -> AlternatingPath:
    """A long M-alternating path: DFS in the auxiliary digraph on the red
    vertices, lifted back to the host graph."""
    if not isinstance(M, PairList):
        M = PairList(M)
    if H is None:
        H = build_aux(g, M, scope=(), rng=rng)
    chain = dfs_long_path(H, range(H.k))
    return AlternatingPath(H.lift(chain), chain)


def validate_alternating(g: Graph, M: PairList, path, *, terminals: bool = False) -> tuple[bool, str]:
    """Check the alternation pattern.

    Without terminals the path is pair step, edge, pair step, ..., pair step.
    With terminals it is edge, pair step, ..., pair step, edge between two
    vertices outside the pairs."""
    path = [int(v) for v in path]
    if len(set(path)) != len(path):
        return False, "repeated vertex"
    i, L = 0, len(path)
    if terminals:
        if L < 2 or path[0] in M.partner or path[-1] in M.partner:
            return False, "terminals must lie outside the pairs"
        i = 1
        end = L - 1
    else:
        end = L
    if i >= end:
        return False, "no pair step"
    while i < end:
        v = path[i]
        if v not in M.partner:
            return False, f"vertex {v} is not in a pair"
        w = M.partner[v]
        if w == v:
            j = i
        elif i + 1 < end and path[i + 1] == w:
            j = i + 1
        else:
            return False, f"pair of {v} not traversed"
        if j + 1 < L and (j + 1 < end or terminals) and not g.has_edge(path[j], path[j + 1]):
            return False, f"non-edge {path[j]}-{path[j + 1]}"
        i = j + 1
    if terminals and not g.has_edge(path[0], path[1]):
        return False, f"non-edge {path[0]}-{path[1]}"
    return True, "ok"


def pairs_on(M: PairList, path) -> list:
    out = []
    for v in path:
        i = M.index.get(int(v))
        if i is not None and (not out or out[-1] != i):
            out.append(i)
    return out


# --- good embeddings --------------------------------------------------------

class EmbeddingStall(RuntimeError):
    pass


@dataclass
class GoodnessReport:
    ok: bool
    checked: int
    exhaustive: bool
    witness: tuple | None = None      # a violating set, if any
    slack: int | None = None


class GoodEmbedding:
    """A directed forest embedded in a digraph, kept (s, D)-good.

    Goodness asks, for every vertex set X with |X| <= s, that the
    out-neighbours of X outside the image number at least
    sum over X of (D - forest degree) plus |X ∩ image|.  Forest nodes are
    identified with their images.  The forest degree counts in- and
    out-arcs."""

    def __init__(self, H: Digraph, s: int, D: int = 3, *, exhaustive_limit: int = 18,
                 local_size: int = 2, check_every: bool = False, sample_rng=None):
        self.H = H
        self.s = int(s)
        self.D = int(D)
        self.exhaustive_limit = exhaustive_limit
        self.local_size = local_size
        self.check_every = check_every
        self.used = np.zeros(H.n, dtype=bool)
        self.deg = np.zeros(H.n, dtype=np.int64)
        self.parent: dict = {}
        self.children: dict = {}
        self.last: int | None = None
        self._rng = np.random.default_rng(sample_rng)
        self._exhaustive = H.n <= exhaustive_limit
        if self._exhaustive:
            self._outmask = np.array([sum(1 << int(w) for w in H.out(v)) for v in range(H.n)],
                                     dtype=np.int64)

    # state
    def __contains__(self, v):
        return bool(self.used[v])

    @property
    def size(self) -> int:
        return int(self.used.sum())

    def image(self) -> dict:
        return {v: self.parent.get(v) for v in np.flatnonzero(self.used).tolist()}

    def add_root(self, v: int) -> "GoodEmbedding":
        if self.used[v]:
            raise EmbeddingStall(f"vertex {v} already embedded")
        self.used[v] = True
        self.parent[v] = None
        self.children[v] = []
        return self

    def _attach(self, p: int, c: int) -> None:
        self.used[c] = True
        self.parent[c] = p
        self.children[c] = []
        self.children[p].append(c)
        self.deg[p] += 1
        self.deg[c] += 1

    def _detach(self, c: int) -> None:
        p = self.parent.pop(c)
        self.children.pop(c)
        self.children[p].remove(c)
        self.deg[p] -= 1
        self.deg[c] -= 1
        self.used[c] = False

    # goodness
    def slack(self, X) -> int:
        X = list(X)
        gamma = self.H.out_set(X)
        free = sum(1 for w in gamma if not self.used[w])
        need = sum(self.D - int(self.deg[v]) for v in X) + sum(1 for v in X if self.used[v])
        return free - need

    def _violations_exhaustive(self) -> np.ndarray:
        N = self.H.n
        size = 1 << N
        nbr = np.zeros(size, dtype=np.int64)
        need = np.zeros(size, dtype=np.int64)
        card = np.zeros(size, dtype=np.int64)
        cost = (self.D - self.deg + self.used.astype(np.int64)).astype(np.int64)
        for i in range(N):
            lo, hi = 1 << i, 1 << (i + 1)
            nbr[lo:hi] = nbr[:lo] | self._outmask[i]
            need[lo:hi] = need[:lo] + cost[i]
            card[lo:hi] = card[:lo] + 1
        usedmask = int(sum(1 << v for v in np.flatnonzero(self.used).tolist()))
        free = np.bitwise_count(nbr & ~np.int64(usedmask)).astype(np.int64)
        return (card <= self.s) & (free < need)

    def check(self, samples: int = 2000) -> GoodnessReport:
        """Full check for small digraphs, random sets of size <= min(s, 4) otherwise."""
        if self._exhaustive:
            viol = self._violations_exhaustive()
            bad = np.flatnonzero(viol)
            if bad.size:
                m = int(bad[0])
                X = tuple(i for i in range(self.H.n) if m >> i & 1)
                return GoodnessReport(False, len(viol), True, X, self.slack(X))
            return GoodnessReport(True, len(viol), True)
        top = max(1, min(self.s, 4))
        for _ in range(samples):
            k = int(self._rng.integers(1, top + 1))
            X = tuple(self._rng.choice(self.H.n, size=min(k, self.H.n), replace=False).tolist())
            sl = self.slack(X)
            if sl < 0:
                return GoodnessReport(False, samples, False, X, sl)
        return GoodnessReport(True, samples, False)

    def _accepts(self, p: int, c: int) -> bool:
        if self._exhaustive:
            before = self._violations_exhaustive()
            self._attach(p, c)
            after = self._violations_exhaustive()
            self._detach(c)
            return not bool((after & ~before).any())
        # Only sets hitting the in-neighbours of c and avoiding p lose slack, by one.
        cand = [int(u) for u in self.H.inn(c) if u != p]
        top = min(self.local_size, self.s)
        if top >= 1:
            for u in cand:
                if self.slack((u,)) == 0:
                    return False
        if top >= 2:
            for i, u in enumerate(cand):
                for w in cand[i + 1:]:
                    if self.slack((u, w)) == 0:
                        return False
        return True

    def candidates(self, p: int) -> list:
        o = self.H.out(p)
        return o[~self.used[o]].tolist()

    def extend(self, p: int) -> int:
        """Embed a new out-leaf below ``p``; returns its image."""
        if not self.used[p]:
            raise EmbeddingStall(f"parent {p} is not embedded")
        if self.deg[p] + 1 > self.D:
            raise EmbeddingStall(f"parent {p} already has degree {self.D}")
        for c in self.candidates(p):
            if self._accepts(p, c):
                self._attach(p, c)
                self.last = c
                if self.check_every:
                    rep = self.check()
                    if not rep.ok:
                        log.warning("goodness violated after extend: %s", rep.witness)
                return c
        raise EmbeddingStall(f"no out-neighbour of {p} keeps the embedding good")

    def rollback(self, leaf: int) -> None:
        if leaf not in self.parent or self.parent[leaf] is None:
            raise EmbeddingStall(f"{leaf} is not an embedded non-root vertex")
        if self.children[leaf]:
            raise EmbeddingStall(f"{leaf} is not a leaf")
        self._detach(leaf)
        if self.check_every:
            rep = self.check()
            if not rep.ok:
                log.warning("goodness violated after rollback: %s", rep.witness)


def fp_extend(emb: GoodEmbedding, parent: int) -> GoodEmbedding:
    emb.extend(parent)
    return emb


def fp_rollback(emb: GoodEmbedding, leaf: int) -> GoodEmbedding:
    emb.rollback(leaf)
    return emb


# --- connecting pairs -------------------------------------------------------

class ConnectionFailure(RuntimeError):
    def __init__(self, index: int, paths: list, detail: str = ""):
        super().__init__(f"could not connect terminal pair {index}" + (f": {detail}" if detail else ""))
        self.index = index
        self.paths = paths


@dataclass
class ConnectResult:
    paths: list
    colourings: int = 1
    max_live: int = 0           # largest embedded forest seen
    tree_sizes: list = field(default_factory=list)
    searched: int = 0           # pairs joined by the breadth-first fallback


class _Tree:
    def __init__(self, root):
        self.root = root
        self.nodes = [root]
        self.queue = [root]
        self.kids = {root: 0}


def _connect_one(g, H: AuxDigraph, emb: GoodEmbedding, a: int, b: int, cap: int):
    ra, rb = int(H.local[a]), int(H.local[b])
    trees = (_Tree(ra), _Tree(rb))
    redmask = [np.zeros(g.n, dtype=bool), np.zeros(g.n, dtype=bool)]
    found = None
    while found is None:
        order = sorted((0, 1), key=lambda t: len(trees[t].nodes))
        grew = False
        for t in order:
            T = trees[t]
            if len(T.nodes) >= cap:
                continue
            while T.queue:
                p = T.queue[0]
                if T.kids[p] >= 2 or emb.deg[p] >= emb.D:
                    T.queue.pop(0)
                    continue
                try:
                    c = emb.extend(p)
                except EmbeddingStall:
                    T.queue.pop(0)
                    continue
                T.kids[p] += 1
                T.kids[c] = 0
                T.nodes.append(c)
                T.queue.append(c)
                hc = int(H.host[c])
                redmask[t][hc] = True
                nb = g.neighbors(hc)
                hits = nb[redmask[1 - t][nb]]
                if hits.size:
                    w = int(H.local[int(hits.min())])
                    found = (c, w) if t == 0 else (w, c)
                grew = True
                break
            if grew:
                break
        if not grew:
            break
    sizes = (len(trees[0].nodes), len(trees[1].nodes), emb.size)
    if found is None:
        for T in trees:
            for v in reversed(T.nodes[1:]):
                emb.rollback(v)
        return None, sizes
    u, w = found
    keep = set()
    chains = []
    for end in (u, w):
        chain = []
        v = end
        while emb.parent.get(v) is not None:
            chain.append(v)
            v = emb.parent[v]
        keep.update(chain)
        chains.append(chain[::-1])
    for T in trees:
        for v in reversed(T.nodes[1:]):
            if v not in keep:
                emb.rollback(v)
    path = [a] + H.lift(chains[0]) + H.lift(chains[1])[::-1] + [b]
    return path, sizes


def _connect_bfs(g, H: AuxDigraph, emb: GoodEmbedding, a: int, b: int):
    """Shortest alternating a-b path through unembedded red vertices.  The
    chain is attached to the forest below ``a`` without a goodness check."""
    ra = int(H.local[a])
    near_b = np.zeros(g.n, dtype=bool)
    near_b[g.neighbors(b)] = True
    prev = {ra: -1}
    frontier = [ra]
    hit = None
    while frontier and hit is None:
        nxt = []
        for u in frontier:
            for w in H.out(u).tolist():
                if w in prev or emb.used[w] or not H.is_red(w):
                    continue
                prev[w] = u
                if near_b[int(H.host[w])]:
                    hit = w
                    break
                nxt.append(w)
            if hit is not None:
                break
        frontier = nxt
    if hit is None:
        return None
    chain = []
    v = hit
    while v != ra:
        chain.append(v)
        v = prev[v]
    chain.reverse()
    parent = ra
    for c in chain:
        emb._attach(parent, c)
        parent = c
    return [a] + H.lift(chain) + [b]


def connect_pairs(g: Graph, M: PairList, terminals, rng=None,
                  cfg: ConnectorConfig | None = None) -> ConnectResult:
    """Vertex-disjoint M-alternating paths joining each terminal pair.

    Pairs are handled in order.  For each, two out-trees are grown from the
    terminals in the auxiliary digraph, smaller tree first, until a host edge
    joins two red tree vertices; everything off the resulting path is rolled
    back leaf by leaf.  A terminal may occur in two terminal pairs (a path of
    one vertex between two connections).  When a pair cannot be connected the
    remaining pairs are re-coloured, up to ``cfg.colourings`` colourings."""
    cfg = cfg or DESK.connector
    if not isinstance(M, PairList):
        M = PairList(M)
    rng = np.random.default_rng(rng)
    terminals = [(int(a), int(b)) for a, b in terminals]
    tv = sorted({v for ab in terminals for v in ab})
    if set(tv) & M.vertices:
        raise PairListError("terminals must lie outside the pairs")
    for i, (a, b) in enumerate(terminals):
        if a == b:
            raise PairListError(f"terminal pair {i} repeats vertex {a}")
    available = list(range(len(M)))
    paths: list = []
    res = ConnectResult(paths, 0)
    idx = 0
    while idx < len(terminals):
        if res.colourings >= cfg.colourings:
            raise ConnectionFailure(idx, paths, f"{cfg.colourings} colourings tried")
        res.colourings += 1
        sub = M.subset(available)
        H = build_aux(g, sub, scope=tv, rng=rng)
        N = H.n
        s = max(1, int(cfg.s_frac * N))
        if cfg.s_max is not None:
            s = min(s, cfg.s_max)
        emb = GoodEmbedding(H, s, cfg.max_degree, exhaustive_limit=cfg.exhaustive_limit,
                            check_every=cfg.check_every, sample_rng=rng.integers(2**32))
        for v in tv:
            emb.add_root(int(H.local[v]))
        cap = max(cfg.tree_min, math.ceil(cfg.tree_frac * N))
        while idx < len(terminals):
            a, b = terminals[idx]
            path, sizes = _connect_one(g, H, emb, a, b, cap)
            res.tree_sizes.append(sizes[:2])
            res.max_live = max(res.max_live, sizes[2])
            if path is None and cfg.search_fallback:
                path = _connect_bfs(g, H, emb, a, b)
                res.searched += path is not None
            if path is None:
                log.debug("pair %d failed with trees %s; recolouring", idx, sizes)
                used = {M.index[v] for p in paths for v in p if v in M.index}
                available = [i for i in range(len(M)) if i not in used]
                break
            paths.append(path)
            idx += 1
    return res


def paths_disjoint(paths, shared=()) -> bool:
    """Pairwise vertex-disjointness, ignoring vertices listed in ``shared``."""
    seen: set = set()
    sh = set(shared)
    for p in paths:
        inner = [v for v in p if v not in sh]
        if seen & set(inner):
            return False
        seen.update(inner)
    return True
