"""Undirected simple graphs, paths with rotation support, and cycles.

Vertices are the integers ``0..n-1``.  Vertex sets are plain Python
``frozenset`` objects; numpy boolean masks are built on demand where a
vectorised count is cheaper.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Malformed graph input (loops, duplicate edges, bad vertex ids)."""


def mask(n: int, vertices: Iterable[int]) -> np.ndarray:
    m = np.zeros(n, dtype=bool)
    idx = np.fromiter(vertices, dtype=np.int64)
    if idx.size:
        m[idx] = True
    return m


class Graph:
    """Immutable simple graph stored as sorted CSR adjacency."""

    def __init__(self, n: int, edges, *, dedupe: bool = False):
        n = int(n)
        if n < 0:
            raise GraphError("negative vertex count")
        arr = np.asarray(edges if isinstance(edges, np.ndarray) else list(edges), dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise GraphError("edge endpoint out of range")
        if np.any(arr[:, 0] == arr[:, 1]):
            u = int(arr[arr[:, 0] == arr[:, 1]][0, 0])
            raise GraphError(f"self-loop at vertex {u}")
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        keys = lo * max(n, 1) + hi
        uniq, first = np.unique(keys, return_index=True)
        if uniq.size != keys.size:
            if not dedupe:
                dup = np.setdiff1d(np.arange(keys.size), first)[0]
                raise GraphError(f"duplicate edge {int(lo[dup])}-{int(hi[dup])}")
            lo, hi = lo[first], hi[first]
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        self.n = n
        self.m = int(lo.size)
        self.indices = dst
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=self.indptr[1:])
        self.degree = np.diff(self.indptr)
        for a in (self.indices, self.indptr, self.degree):
            a.setflags(write=False)
        self._sets: list = [None] * n
        self._csr = None
        if n and self.degree.min() == self.degree.max():
            self.regular_degree: int | None = int(self.degree[0])
        else:
            self.regular_degree = 0 if n == 0 else None

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other):
        return (isinstance(other, Graph) and self.n == other.n and self.m == other.m
                and np.array_equal(self.indices, other.indices))

    __hash__ = None

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def nbr_set(self, v: int) -> frozenset:
        s = self._sets[v]
        if s is None:
            s = frozenset(self.neighbors(v).tolist())
            self._sets[v] = s
        return s

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.nbr_set(u)

    def has_edges(self, us, vs) -> np.ndarray:
        """Vectorised ``has_edge`` over paired arrays."""
        keys = self.__dict__.get("_keys")
        if keys is None:
            rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
            keys = rows * self.n + self.indices
            self.__dict__["_keys"] = keys
        q = np.asarray(us, dtype=np.int64) * self.n + np.asarray(vs, dtype=np.int64)
        i = np.minimum(np.searchsorted(keys, q), max(len(keys) - 1, 0))
        return keys[i] == q if len(keys) else np.zeros(len(q), dtype=bool)

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.n):
            for v in self.neighbors(u).tolist():
                if u < v:
                    yield u, v

    def edge_array(self) -> np.ndarray:
        src = np.repeat(np.arange(self.n), self.degree)
        keep = src < self.indices
        return np.stack([src[keep], self.indices[keep]], axis=1)

    @property
    def mean_degree(self) -> float:
        return 2.0 * self.m / self.n if self.n else 0.0

    def adjacency(self) -> sp.csr_matrix:
        if self._csr is None:
            data = np.ones(self.indices.size, dtype=np.float64)
            self._csr = sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))
        return self._csr

    def dense(self) -> np.ndarray:
        return self.adjacency().toarray()

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        from scipy.sparse.csgraph import connected_components
        return connected_components(self.adjacency(), directed=False)[0] == 1

    def bfs_distances(self, source: int, limit: int | None = None) -> dict:
        dist = {source: 0}
        frontier = [source]
        depth = 0
        while frontier and (limit is None or depth < limit):
            depth += 1
            nxt = []
            for u in frontier:
                for w in self.neighbors(u).tolist():
                    if w not in dist:
                        dist[w] = depth
                        nxt.append(w)
            frontier = nxt
        return dist

    def induced(self, vertices: Iterable[int]) -> tuple["Graph", list]:
        """Induced subgraph relabelled to ``0..k-1``; returns it with the label list."""
        labels = sorted(set(vertices))
        index = {v: i for i, v in enumerate(labels)}
        edges = [(index[u], index[w]) for u in labels for w in self.neighbors(u).tolist()
                 if w in index and u < w]
        return Graph(len(labels), edges), labels


# --- paths -----------------------------------------------------------------

class PathError(ValueError):
    pass


class PathState:
    """A simple path ``order[0] - order[1] - ... - order[-1]``.

    ``pos[v]`` is the index of ``v`` on the path or -1.  ``virtual`` holds
    vertex pairs that are allowed as path edges even though they are not
    graph edges (used when a path segment stands in for a contracted piece).
    """

    __slots__ = ("order", "pos", "n", "virtual", "_vset")

    def __init__(self, order: Sequence[int], n: int | None = None, virtual=()):
        order = np.array(order, dtype=np.int64).reshape(-1)
        if n is None:
            n = int(order.max()) + 1 if order.size else 0
        pos = np.full(n, -1, dtype=np.int64)
        if order.size:
            if order.min() < 0 or order.max() >= n:
                raise PathError("path vertex out of range")
            pos[order] = np.arange(order.size)
            if np.count_nonzero(pos >= 0) != order.size:
                raise PathError("path repeats a vertex")
        self.order = order
        self.pos = pos
        self.n = n
        self.virtual = frozenset(frozenset(p) for p in virtual)
        self._vset = None

    @classmethod
    def _raw(cls, order, pos, n, virtual):
        p = cls.__new__(cls)
        p.order, p.pos, p.n, p.virtual, p._vset = order, pos, n, virtual, None
        return p

    def copy(self) -> "PathState":
        return PathState._raw(self.order.copy(), self.pos.copy(), self.n, self.virtual)

    def __len__(self):
        return int(self.order.size)

    def __iter__(self):
        return iter(self.order.tolist())

    def __contains__(self, v):
        return 0 <= v < self.n and self.pos[v] >= 0

    def __eq__(self, other):
        return isinstance(other, PathState) and np.array_equal(self.order, other.order)

    __hash__ = None

    def __repr__(self):
        if len(self) <= 12:
            return f"PathState({self.tolist()})"
        return f"PathState(len={len(self)}, {self.first}..{self.last})"

    def tolist(self) -> list:
        return self.order.tolist()

    @property
    def first(self) -> int:
        return int(self.order[0])

    @property
    def last(self) -> int:
        return int(self.order[-1])

    @property
    def vertices(self) -> frozenset:
        if self._vset is None:
            self._vset = frozenset(self.order.tolist())
        return self._vset

    def index(self, v: int) -> int:
        i = int(self.pos[v]) if 0 <= v < self.n else -1
        if i < 0:
            raise PathError(f"vertex {v} not on path")
        return i

    def path_neighbors(self, v: int) -> frozenset:
        i = self.index(v)
        out = []
        if i > 0:
            out.append(int(self.order[i - 1]))
        if i + 1 < len(self):
            out.append(int(self.order[i + 1]))
        return frozenset(out)

    def succ(self, v: int):
        i = self.index(v)
        return int(self.order[i + 1]) if i + 1 < len(self) else None

    def pred(self, v: int):
        i = self.index(v)
        return int(self.order[i - 1]) if i > 0 else None

    def reversed(self) -> "PathState":
        order = self.order[::-1].copy()
        pos = self.pos.copy()
        pos[order] = np.arange(order.size)
        return PathState._raw(order, pos, self.n, self.virtual)

    def oriented_from(self, v: int) -> "PathState":
        if v == self.first:
            return self
        if v == self.last:
            return self.reversed()
        raise PathError(f"{v} is not an endpoint")

    def subpath(self, i: int, j: int) -> "PathState":
        """Vertices at indices ``i..j`` inclusive."""
        return PathState(self.order[i:j + 1], self.n, self.virtual)

    def is_valid(self, g: Graph) -> bool:
        o = self.order.tolist()
        for a, b in zip(o, o[1:]):
            if not g.has_edge(a, b) and frozenset((a, b)) not in self.virtual:
                return False
        return True

    def edge_set(self) -> set:
        o = self.order.tolist()
        return {frozenset(e) for e in zip(o, o[1:])}

    # Rotation: with the path oriented so ``fixed`` is first and the other
    # end is ``v_l``, adding the edge ``v_l-pivot`` and removing
    # ``pivot-pivot.next`` yields a path ending at the old ``pivot.next``.
    def rotate(self, fixed: int, pivot: int, g: Graph | None = None) -> "PathState":
        flip = fixed != self.first
        if flip and fixed != self.last:
            raise PathError(f"{fixed} is not an endpoint")
        work = self.reversed() if flip else self.copy()
        i = work.index(pivot)
        l = len(work)
        if not 0 < i < l - 1:
            raise PathError("pivot must be an interior vertex")
        if g is not None and not g.has_edge(work.last, pivot):
            raise PathError(f"no edge between endpoint {work.last} and pivot {pivot}")
        work._rotate_tail(i)
        return work.reversed() if flip else work

    def _rotate_tail(self, i: int) -> None:
        # in place: reverse everything after index i
        seg = self.order[i + 1:][::-1].copy()
        self.order[i + 1:] = seg
        self.pos[seg] = np.arange(i + 1, self.order.size)
        self._vset = None


def dif(p: PathState, q: PathState) -> frozenset:
    """Vertices whose set of path-neighbours differs between two paths on the same vertex set."""
    if len(p) != len(q) or p.vertices != q.vertices:
        raise PathError("paths cover different vertex sets")
    return frozenset(v for v in p.order.tolist() if p.path_neighbors(v) != q.path_neighbors(v))


def _nbr_pairs(p: PathState) -> tuple[np.ndarray, np.ndarray]:
    n = max(p.n, 1)
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)
    o = p.order
    left[o[1:]] = o[:-1]
    right[o[:-1]] = o[1:]
    return np.minimum(left, right), np.maximum(left, right)


def dif_fast(p: PathState, q: PathState) -> frozenset:
    """Vectorised :func:`dif`; the two must agree."""
    if len(p) != len(q) or p.vertices != q.vertices:
        raise PathError("paths cover different vertex sets")
    n = max(p.n, q.n)
    if p.n != q.n:
        p = PathState(p.order, n)
        q = PathState(q.order, n)
    a0, a1 = _nbr_pairs(p)
    b0, b1 = _nbr_pairs(q)
    o = p.order
    bad = (a0[o] != b0[o]) | (a1[o] != b1[o])
    return frozenset(o[bad].tolist())


def interior(p: PathState, x: Iterable[int]) -> frozenset:
    """Vertices of ``x`` whose path-neighbours (two of them) also lie in ``x``."""
    if len(p) < 3:
        return frozenset()
    m = mask(p.n, (v for v in x if v in p))
    inside = m[p.order]
    ok = inside[1:-1] & inside[:-2] & inside[2:]
    return frozenset(p.order[1:-1][ok].tolist())


def interior_mask(p: PathState, m: np.ndarray) -> np.ndarray:
    out = np.zeros(p.n, dtype=bool)
    if len(p) >= 3:
        inside = m[p.order]
        ok = inside[1:-1] & inside[:-2] & inside[2:]
        out[p.order[1:-1][ok]] = True
    return out


def components_on(p: PathState, a: Iterable[int]) -> int:
    """Number of maximal runs of ``a`` along the path."""
    m = mask(p.n, (v for v in a if v in p))
    inside = m[p.order]
    if inside.size == 0:
        return 0
    return int(inside[0]) + int(np.count_nonzero(inside[1:] & ~inside[:-1]))


def runs_on(p: PathState, a) -> list:
    """The maximal runs of ``a`` along ``p`` as (start, end) index pairs."""
    m = a if isinstance(a, np.ndarray) else mask(p.n, (v for v in a if v in p))
    inside = m[p.order]
    runs = []
    start = None
    for i, flag in enumerate(inside.tolist()):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(inside) - 1))
    return runs


def edges_between(g: Graph, a: Iterable[int], b: Iterable[int], single: bool = False) -> int:
    """Ordered pairs ``(u, v)`` with ``u`` in ``a``, ``v`` in ``b`` and ``uv`` an edge.

    Edges with both ends in ``a & b`` are therefore counted twice.  With
    ``single=True`` every edge touching both sets is counted once.
    """
    a = frozenset(a)
    b = frozenset(b)
    ma, mb = mask(g.n, a), mask(g.n, b)
    M = g.adjacency()
    fa, fb = ma.astype(np.float64), mb.astype(np.float64)
    double = int(round(fa @ (M @ fb)))
    if not single:
        return double
    fc = (ma & mb).astype(np.float64)
    inner = int(round(fc @ (M @ fc))) // 2
    return double - inner


# --- cycles ----------------------------------------------------------------

class Cycle:
    """A cyclic vertex sequence; the closing edge joins the last and first vertex."""

    __slots__ = ("order",)

    def __init__(self, order: Sequence[int]):
        self.order = tuple(int(v) for v in order)

    def __len__(self):
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def __repr__(self):
        return f"Cycle(len={len(self)})" if len(self) > 12 else f"Cycle({list(self.order)})"

    def __eq__(self, other):
        return isinstance(other, Cycle) and self.order == other.order

    __hash__ = None

    def edges(self) -> list:
        o = self.order
        return [(o[i], o[(i + 1) % len(o)]) for i in range(len(o))]

    def edge_set(self) -> set:
        return {frozenset(e) for e in self.edges()}

    def canonical(self) -> "Cycle":
        """Rotate to start at the smallest vertex and pick the smaller direction."""
        o = list(self.order)
        if not o:
            return self
        i = o.index(min(o))
        o = o[i:] + o[:i]
        if len(o) > 2 and o[-1] < o[1]:
            o = [o[0]] + o[1:][::-1]
        return Cycle(o)

    def as_path_from(self, v: int, forward: bool = True) -> list:
        o = list(self.order)
        i = o.index(v)
        o = o[i:] + o[:i]
        if not forward:
            o = [o[0]] + o[1:][::-1]
        return o


@dataclass(frozen=True)
class CycleCheck:
    ok: bool
    reason: str = "ok"
    detail: str = ""

    def __bool__(self):
        return self.ok


def verify_cycle_on(g: Graph, c: Cycle | Sequence[int], vertices: Iterable[int] | None = None) -> CycleCheck:
    """Check ``c`` is a cycle of ``g`` whose vertex set is ``vertices`` (all of ``g`` by default)."""
    order = list(c.order if isinstance(c, Cycle) else c)
    target = set(range(g.n)) if vertices is None else set(vertices)
    if any(not (0 <= v < g.n) for v in order):
        return CycleCheck(False, "range", "vertex id outside graph")
    if len(set(order)) != len(order):
        return CycleCheck(False, "repeat", "a vertex appears twice")
    if len(order) < 3:
        return CycleCheck(False, "length", f"{len(order)} vertices cannot form a cycle")
    if set(order) != target:
        return CycleCheck(False, "length", f"covers {len(order)} of {len(target)} vertices")
    arr = np.asarray(order, dtype=np.int64)
    nxt = np.roll(arr, -1)
    bad = np.flatnonzero(~g.has_edges(arr, nxt))
    if bad.size:
        i = int(bad[0])
        return CycleCheck(False, "non-edge", f"{order[i]}-{int(nxt[i])}")
    return CycleCheck(True)


def verify_hamilton_cycle(g: Graph, c: Cycle | Sequence[int]) -> CycleCheck:
    return verify_cycle_on(g, c, None)


# --- file formats ----------------------------------------------------------

def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{u} {v}" for u, v in g.edge_array().tolist())
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise GraphError("edge list must start with a 'n m' header")
    try:
        n, m = int(rows[0][0]), int(rows[0][1])
        edges = [(int(r[0]), int(r[1])) for r in rows[1:]]
    except (ValueError, IndexError) as exc:
        raise GraphError(f"bad edge list: {exc}") from None
    if any(len(r) != 2 for r in rows[1:]):
        raise GraphError("every edge line needs exactly two vertex ids")
    if len(edges) != m:
        raise GraphError(f"header says {m} edges but found {len(edges)}")
    return Graph(n, edges)


def format_json(g: Graph) -> str:
    return json.dumps({"n": g.n, "m": g.m, "edges": g.edge_array().tolist()}) + "\n"


def parse_json(text: str) -> Graph:
    try:
        obj = json.loads(text)
        n, edges = int(obj["n"]), obj["edges"]
    except (ValueError, KeyError, TypeError) as exc:
        raise GraphError(f"bad graph json: {exc}") from None
    g = Graph(n, [tuple(e) for e in edges])
    if "m" in obj and int(obj["m"]) != g.m:
        raise GraphError("edge count mismatch")
    return g


def read_graph(path: str) -> Graph:
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".json") or text.lstrip().startswith("{"):
        return parse_json(text)
    return parse_edge_list(text)


def write_graph(g: Graph, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(format_json(g) if path.endswith(".json") else format_edge_list(g))


def read_cycle(path: str) -> Cycle:
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{") or text.lstrip().startswith("["):
        obj = json.loads(text)
        seq = obj["cycle"] if isinstance(obj, dict) else obj
    else:
        seq = text.split()
    try:
        return Cycle([int(v) for v in seq])
    except (TypeError, ValueError) as exc:
        raise GraphError(f"bad cycle file: {exc}") from None
