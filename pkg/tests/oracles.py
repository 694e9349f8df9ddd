"""Brute-force reference implementations, written independently of the package.

Everything here works on plain edge lists and Python sets so that a bug in
the package's CSR code cannot hide itself.
"""
from __future__ import annotations

import itertools
from functools import lru_cache


def adjacency_sets(n: int, edges) -> list:
    adj = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def graph_sets(g) -> list:
    return adjacency_sets(g.n, g.edge_array().tolist())


def is_cycle_on(adj: list, order, vertices=None) -> bool:
    order = list(order)
    target = set(range(len(adj))) if vertices is None else set(vertices)
    if len(order) < 3 or len(set(order)) != len(order) or set(order) != target:
        return False
    return all(order[(i + 1) % len(order)] in adj[order[i]] for i in range(len(order)))


def held_karp(adj: list) -> bool:
    """Hamiltonicity by dynamic programming over subsets containing vertex 0."""
    n = len(adj)
    if n < 3:
        return False
    full = (1 << n) - 1
    reach = [0] * (1 << n)          # reach[S]: bitmask of ends v with a 0..v path on S
    reach[1] = 1
    nb = [sum(1 << w for w in adj[v]) for v in range(n)]
    for S in range(1, 1 << n):
        if not S & 1 or not reach[S]:
            continue
        ends = reach[S]
        v = 0
        while ends:
            if ends & 1:
                free = nb[v] & ~S
                while free:
                    low = free & -free
                    w = low.bit_length() - 1
                    reach[S | low] |= 1 << w
                    free ^= low
            ends >>= 1
            v += 1
    ends = reach[full]
    return any(ends >> v & 1 and 0 in adj[v] for v in range(1, n))


def longest_cycle(adj: list) -> int:
    """Length of a longest cycle (0 if the graph is a forest), by DFS from each
    smallest vertex."""
    n = len(adj)
    best = 0

    def dfs(start, v, seen, length):
        nonlocal best
        for w in adj[v]:
            if w == start and length >= 3:
                best = max(best, length)
            elif w > start and w not in seen:
                seen.add(w)
                dfs(start, w, seen, length + 1)
                seen.discard(w)

    for s in range(n):
        dfs(s, s, {s}, 1)
    return best


def shortest_cycle_len_through(adj: list, root: int, allowed: set, max_len: int) -> int | None:
    """Length of a shortest cycle through ``root`` inside ``allowed``, by
    exhaustive simple-path enumeration."""
    best = None

    def dfs(v, seen, length):
        nonlocal best
        if best is not None and length >= best:
            return
        for w in adj[v]:
            if w == root and length >= 3:
                best = length if best is None else min(best, length)
            elif w in allowed and w not in seen and length < max_len:
                seen.add(w)
                dfs(w, seen, length + 1)
                seen.discard(w)

    if root not in allowed:
        return None
    dfs(root, {root}, 1)
    return best


def path_neighbourhoods(order) -> dict:
    out = {}
    for i, v in enumerate(order):
        nb = set()
        if i > 0:
            nb.add(order[i - 1])
        if i + 1 < len(order):
            nb.add(order[i + 1])
        out[v] = nb
    return out


def dif_oracle(p, q) -> set:
    a, b = path_neighbourhoods(p), path_neighbourhoods(q)
    return {v for v in a if a[v] != b[v]}


def interior_oracle(order, X) -> set:
    X = set(X)
    nb = path_neighbourhoods(order)
    return {v for v in X if v in nb and len(nb[v]) == 2 and nb[v] <= X}


def rotate_oracle(order, pivot) -> list:
    """Rotation keeping order[0]: break the edge after the pivot, reverse the tail."""
    i = order.index(pivot)
    return list(order[:i + 1]) + list(order[i + 1:])[::-1]


def one_rotation_endpoints(adj, order) -> set:
    """New endpoints reachable by one rotation with the first vertex fixed."""
    last = order[-1]
    out = set()
    for i in range(1, len(order) - 2):
        if order[i] in adj[last]:
            out.add(order[i + 1])
    return out


def eigen_lambda(adj) -> float:
    import numpy as np
    n = len(adj)
    A = np.zeros((n, n))
    for v in range(n):
        for w in adj[v]:
            A[v, w] = 1
    ev = np.sort(np.linalg.eigvalsh(A))
    return float(max(abs(ev[0]), abs(ev[-2])))


def clean_fixed_point(adj, S, threshold) -> set:
    """Largest subset of S with induced min degree >= threshold (it is unique)."""
    cur = set(S)
    changed = True
    while changed:
        changed = False
        for v in sorted(cur):
            if len(adj[v] & cur) < threshold:
                cur.discard(v)
                changed = True
    return cur


def goodness_violations(out_sets, used, deg, s, D) -> list:
    """Every X with |X| <= s whose free out-neighbourhood is too small."""
    n = len(out_sets)
    bad = []
    for k in range(1, min(s, n) + 1):
        for X in itertools.combinations(range(n), k):
            gamma = set().union(*(out_sets[v] for v in X))
            free = sum(1 for w in gamma if w not in used)
            need = sum(D - deg[v] for v in X) + sum(1 for v in X if v in used)
            if free < need:
                bad.append(X)
    return bad


@lru_cache(maxsize=None)
def small_graph_corpus(seed: int, count: int) -> tuple:
    """Connected graphs on 3..9 vertices: random G(n, p) plus structured ones."""
    import numpy as np
    rng = np.random.default_rng(seed)
    out = []
    for n in range(3, 10):
        out.append((n, tuple((i, (i + 1) % n) for i in range(n))))               # cycle
        out.append((n, tuple(itertools.combinations(range(n), 2))))              # complete
        out.append((n, tuple((0, i) for i in range(1, n))))                      # star
        out.append((n, tuple((i, i + 1) for i in range(n - 1))))                 # path
        a = n // 2
        out.append((n, tuple((i, j) for i in range(a) for j in range(a, n))))    # K_{a,n-a}
        if n >= 4:                                                                # wheel
            rim = [(1 + i, 1 + (i + 1) % (n - 1)) for i in range(n - 1)]
            out.append((n, tuple(rim + [(0, i) for i in range(1, n)])))
    while len(out) < count:
        n = int(rng.integers(3, 10))
        p = float(rng.uniform(0.25, 0.9))
        edges = tuple((i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < p)
        adj = adjacency_sets(n, edges)
        if connected(adj):
            out.append((n, edges))
    return tuple(out)


def connected(adj) -> bool:
    n = len(adj)
    if n == 0:
        return True
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n
