"""Graph families used as test beds: Cayley graphs, Paley graphs, unions of
one-factors, sum graphs over prime fields, random regular graphs and G(n, p)."""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, GraphError


def as_rng(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# --- groups ----------------------------------------------------------------

class Group:
    """A finite group on the labels ``0..order-1`` with identity ``0``."""

    name = "group"
    order = 0

    def mul(self, a: int, b: int) -> int:
        return int(self.right_mul(np.array([a]), b)[0])

    def right_mul(self, elems: np.ndarray, s: int) -> np.ndarray:
        raise NotImplementedError

    def inv(self, a: int) -> int:
        raise NotImplementedError

    def label(self, a: int) -> str:
        return str(a)

    def elements(self) -> np.ndarray:
        return np.arange(self.order)

    def check_axioms(self, rng=None, samples: int = 2000) -> None:
        """Identity and inverses exhaustively, associativity on a sample."""
        rng = as_rng(rng if rng is not None else 0)
        every = self.elements()
        if not np.array_equal(self.right_mul(every, 0), every):
            raise GraphError(f"{self.name}: 0 is not a right identity")
        for a in range(self.order):
            if self.mul(a, self.inv(a)) != 0 or self.mul(0, a) != a:
                raise GraphError(f"{self.name}: inverse/identity fails at {a}")
        trip = rng.integers(0, self.order, size=(samples, 3))
        for a, b, c in trip.tolist():
            if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)):
                raise GraphError(f"{self.name}: not associative at {(a, b, c)}")


class Cyclic(Group):
    def __init__(self, m: int):
        if m < 1:
            raise GraphError("cyclic group needs positive order")
        self.m = self.order = m
        self.name = f"z{m}"

    def right_mul(self, elems, s):
        return (np.asarray(elems) + s) % self.m

    def inv(self, a):
        return (-a) % self.m


class ElementaryAbelian2(Group):
    """``Z_2^k`` with elements encoded as bit vectors."""

    def __init__(self, k: int):
        if k < 1 or k > 30:
            raise GraphError("z2^k needs 1 <= k <= 30")
        self.k = k
        self.order = 1 << k
        self.name = f"z2^{k}"

    def right_mul(self, elems, s):
        return np.asarray(elems) ^ s

    def inv(self, a):
        return a

    def label(self, a):
        return format(a, f"0{self.k}b")


class Dihedral(Group):
    """Symmetries of an m-gon; ``r + m*f`` is rotation r followed by f flips."""

    def __init__(self, m: int):
        if m < 2:
            raise GraphError("dihedral group needs m >= 2")
        self.m = m
        self.order = 2 * m
        self.name = f"d{m}"

    def right_mul(self, elems, s):
        elems = np.asarray(elems)
        r1, f1 = elems % self.m, elems // self.m
        r2, f2 = s % self.m, s // self.m
        r = np.where(f1 == 1, r1 - r2, r1 + r2) % self.m
        return r + self.m * (f1 ^ f2)

    def inv(self, a):
        r, f = a % self.m, a // self.m
        return a if f else (-r) % self.m


class Symmetric(Group):
    """Permutations of ``m <= 8`` points, labelled by lexicographic rank."""

    def __init__(self, m: int):
        if not 1 <= m <= 8:
            raise GraphError("symmetric group supported for m <= 8")
        self.m = m
        self.perms = np.array(list(itertools.permutations(range(m))), dtype=np.int64)
        self.order = len(self.perms)
        self.name = f"s{m}"
        self._fact = np.array([math.factorial(m - 1 - i) for i in range(m)], dtype=np.int64)

    def rank(self, perms: np.ndarray) -> np.ndarray:
        perms = np.atleast_2d(perms)
        # Lehmer code
        smaller_right = (perms[:, :, None] > perms[:, None, :]) & np.triu(np.ones((self.m, self.m), bool), 1)
        return smaller_right.sum(axis=2) @ self._fact

    def right_mul(self, elems, s):
        elems = np.asarray(elems)
        composed = self.perms[elems][:, self.perms[s]]
        return self.rank(composed)

    def inv(self, a):
        p = self.perms[a]
        q = np.empty_like(p)
        q[p] = np.arange(self.m)
        return int(self.rank(q)[0])

    def label(self, a):
        return "".join(map(str, self.perms[a]))


class DirectProduct(Group):
    def __init__(self, factors):
        self.factors = list(factors)
        self.sizes = [f.order for f in self.factors]
        self.order = int(np.prod(self.sizes))
        self.name = "x".join(f.name for f in self.factors)

    def split(self, elems):
        elems = np.asarray(elems)
        parts = []
        for size in reversed(self.sizes):
            parts.append(elems % size)
            elems = elems // size
        return parts[::-1]

    def join(self, parts):
        out = np.zeros_like(np.asarray(parts[0]))
        for size, p in zip(self.sizes, parts):
            out = out * size + p
        return out

    def right_mul(self, elems, s):
        a = self.split(elems)
        b = [int(x[0]) for x in self.split(np.array([s]))]
        return self.join([f.right_mul(x, y) for f, x, y in zip(self.factors, a, b)])

    def inv(self, a):
        parts = [int(x[0]) for x in self.split(np.array([a]))]
        return int(self.join([np.array([f.inv(p)]) for f, p in zip(self.factors, parts)])[0])

    def label(self, a):
        parts = [int(x[0]) for x in self.split(np.array([a]))]
        return "(" + ",".join(f.label(p) for f, p in zip(self.factors, parts)) + ")"


_GROUP_RE = re.compile(r"^(z2\^(\d+)|[zc](\d+)|d(\d+)|s(\d+))$")


def parse_group(text: str) -> Group:
    """Parse ``z12``, ``z2^8``, ``d5``, ``s4`` or products such as ``z3xz4``."""
    parts = text.strip().lower().split("x")
    groups = []
    for part in parts:
        m = _GROUP_RE.match(part)
        if not m:
            raise GraphError(f"unknown group {part!r}")
        if m.group(2):
            groups.append(ElementaryAbelian2(int(m.group(2))))
        elif m.group(3):
            groups.append(Cyclic(int(m.group(3))))
        elif m.group(4):
            groups.append(Dihedral(int(m.group(4))))
        else:
            groups.append(Symmetric(int(m.group(5))))
    return groups[0] if len(groups) == 1 else DirectProduct(groups)


def cayley(group: Group, gens) -> Graph:
    """Cayley graph with edges ``{g, g*s}``; the generating set is closed under inverses first."""
    gens = sorted({int(s) % group.order for s in gens})
    if 0 in gens:
        raise GraphError("generating set contains the identity")
    full = sorted(set(gens) | {group.inv(s) for s in gens})
    every = group.elements()
    edges = np.concatenate([np.stack([every, group.right_mul(every, s)], axis=1) for s in full]) if full \
        else np.zeros((0, 2), dtype=np.int64)
    return Graph(group.order, edges, dedupe=True)


def random_cayley(group: Group, d: int, rng=None) -> tuple[Graph, list]:
    """Cayley graph on a uniformly random d-subset of non-identity elements."""
    rng = as_rng(rng)
    if not 0 <= d < group.order:
        raise GraphError("need 0 <= d < |G|")
    gens = sorted((rng.choice(group.order - 1, size=d, replace=False) + 1).tolist())
    return cayley(group, gens), gens


# --- number-theoretic families --------------------------------------------

def is_prime(q: int) -> bool:
    if q < 2:
        return False
    for p in range(2, math.isqrt(q) + 1):
        if q % p == 0:
            return False
    return True


def primitive_root(q: int) -> int:
    if not is_prime(q):
        raise GraphError(f"{q} is not prime")
    if q == 2:
        return 1
    factors = {p for p in range(2, q) if (q - 1) % p == 0 and is_prime(p)}
    for g in range(2, q):
        if all(pow(g, (q - 1) // p, q) != 1 for p in factors):
            return g
    raise AssertionError("unreachable")


def paley(q: int) -> Graph:
    if not is_prime(q) or q % 4 != 1:
        raise GraphError("Paley graphs need a prime q = 1 mod 4")
    squares = sorted({x * x % q for x in range(1, q)})
    return cayley(Cyclic(q), squares)


@dataclass
class SumGraph:
    graph: Graph
    subgroup: list
    generator: int
    regular: bool
    degrees: tuple = field(default=())


def cayley_sum_subgroup(q: int, size: int) -> SumGraph:
    """Graph on F_q joining distinct x, y whenever x + y lies in the
    multiplicative subgroup of the given size.

    Vertices with 2x in the subgroup lose the would-be loop, so the graph is
    only near-regular; ``regular`` and ``degrees`` record what happened.
    """
    if not is_prime(q):
        raise GraphError(f"{q} is not prime")
    if size < 1 or (q - 1) % size:
        raise GraphError(f"subgroup size {size} does not divide {q - 1}")
    g = primitive_root(q)
    step = pow(g, (q - 1) // size, q)
    sub = sorted({pow(step, i, q) for i in range(size)})
    x = np.arange(q)
    edges = []
    for a in sub:
        y = (a - x) % q
        keep = x < y
        edges.append(np.stack([x[keep], y[keep]], axis=1))
    graph = Graph(q, np.concatenate(edges), dedupe=True)
    degs = tuple(sorted(set(graph.degree.tolist())))
    return SumGraph(graph, sub, g, graph.regular_degree is not None, degs)


# --- one-factors -----------------------------------------------------------

def one_factorization(n: int) -> list:
    """Round-robin decomposition of K_n (n even) into n-1 perfect matchings."""
    if n < 2 or n % 2:
        raise GraphError("one-factorisation needs an even n >= 2")
    m = n - 1
    factors = []
    for i in range(m):
        pairs = [(i, m)]
        for j in range(1, n // 2):
            a, b = (i + j) % m, (i - j) % m
            pairs.append((min(a, b), max(a, b)))
        factors.append(pairs)
    return factors


@dataclass
class FactorUnion:
    graph: Graph
    picks: list
    distinct: int
    repeated: int


def sample_factor_union(factors: list, k: int, rng=None, weights=None) -> FactorUnion:
    """Union of k one-factors drawn with replacement (uniform unless weighted)."""
    rng = as_rng(rng)
    p = None
    if weights is not None:
        p = np.asarray(weights, dtype=float)
        p = p / p.sum()
    picks = rng.choice(len(factors), size=k, replace=True, p=p).tolist()
    n = 2 * len(factors[0])
    distinct = sorted(set(picks))
    edges = [e for i in distinct for e in factors[i]]
    return FactorUnion(Graph(n, edges, dedupe=True), picks, len(distinct), k - len(distinct))


# --- random graphs ---------------------------------------------------------

def random_regular(n: int, d: int, rng=None, max_rounds: int = 100) -> Graph:
    """Configuration-model pairing followed by random switches that repair
    loops and repeated edges."""
    rng = as_rng(rng)
    if not 0 <= d < n or (n * d) % 2:
        raise GraphError(f"no {d}-regular graph on {n} vertices")
    if d == n - 1:
        return complete(n)
    if d > n // 2:
        comp = random_regular(n, n - 1 - d, rng, max_rounds)
        full = np.ones((n, n), bool)
        np.fill_diagonal(full, False)
        full[comp.edge_array()[:, 0], comp.edge_array()[:, 1]] = False
        full[comp.edge_array()[:, 1], comp.edge_array()[:, 0]] = False
        u, v = np.nonzero(np.triu(full, 1))
        return Graph(n, np.stack([u, v], axis=1))
    for _ in range(max_rounds):
        stubs = rng.permutation(np.repeat(np.arange(n), d))
        pairs = stubs.reshape(-1, 2)
        pairs.sort(axis=1)
        g = _switch_repair(n, pairs.tolist(), rng)
        if g is not None:
            return g
    raise GraphError("switch repair did not converge")


def _switch_repair(n, pairs, rng, tries_per_edge=200):
    edges = [tuple(p) for p in pairs]
    count: dict = {}
    for e in edges:
        count[e] = count.get(e, 0) + 1
    m = len(edges)

    def is_bad(e):
        return e[0] == e[1] or count[e] > 1

    bad = [i for i, e in enumerate(edges) if is_bad(e)]
    for i in bad:
        if not is_bad(edges[i]):
            continue
        u, v = edges[i]
        for _ in range(tries_per_edge):
            j = int(rng.integers(m))
            x, y = edges[j]
            if j == i or is_bad(edges[j]):
                continue
            if rng.random() < 0.5:
                x, y = y, x
            e1, e2 = tuple(sorted((u, x))), tuple(sorted((v, y)))
            if u == x or v == y or e1 == e2 or count.get(e1, 0) or count.get(e2, 0):
                continue
            count[edges[i]] -= 1
            count[edges[j]] -= 1
            edges[i], edges[j] = e1, e2
            count[e1] = 1
            count[e2] = 1
            break
        else:
            return None
    if any(is_bad(e) for e in edges):
        return None
    return Graph(n, edges)


def gnp(n: int, p: float, rng=None) -> Graph:
    rng = as_rng(rng)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return Graph(n, np.stack([iu[keep], ju[keep]], axis=1))


# --- small named graphs ----------------------------------------------------

def complete(n: int) -> Graph:
    iu, ju = np.triu_indices(n, 1)
    return Graph(n, np.stack([iu, ju], axis=1))


def cycle_graph(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def complete_bipartite(a: int, b: int) -> Graph:
    return Graph(a + b, [(i, a + j) for i in range(a) for j in range(b)])


def petersen() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph(10, outer + spokes + inner)
