import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import graph_sets
from pseudoham import generators as gen
from pseudoham.connector import Digraph
from pseudoham.forest import (ForestStall, LinearForest, RegularityFailure, contract_and_orient,
                              cover_bad_set, few_path_forest, merge_paths, regular_subdigraph,
                              spanning_forest_good_endpoints)


def cover_problems(g, X, Y, F) -> list:
    """Endpoints in Y minus X, inner vertices in X, every X vertex covered."""
    X, Y = set(X), set(Y)
    out = F.problems(g)
    for p in F.paths:
        if p[0] in X or p[-1] in X:
            out.append(f"endpoint in X: {p}")
        if not set(p[1:-1]) <= X:
            out.append(f"inner vertex outside X: {p}")
        if not set(p) <= Y:
            out.append("path leaves Y")
    if not X <= F.cover:
        out.append("X not covered")
    return out


def random_orientation(g, rng) -> Digraph:
    e = g.edge_array()
    flip = rng.random(len(e)) < 0.5
    return Digraph(g.n, np.where(flip[:, None], e[:, ::-1], e))


def test_cover_examples():
    g = gen.complete(6)
    assert cover_bad_set(g, set(), range(6), 2).paths == []
    F = cover_bad_set(g, {0}, range(6), 2)
    assert len(F.paths) == 1 and len(F.paths[0]) == 3 and F.paths[0][1] == 0
    with pytest.raises(ValueError):
        cover_bad_set(g, {0}, {1, 2}, 2)


def test_cover_ordering_stall():
    g = gen.path_graph(5)
    with pytest.raises(ForestStall) as exc:
        cover_bad_set(g, {2}, range(5), 6)      # needs 3 usable neighbours, has 2
    assert exc.value.stage == "ordering" and exc.value.witness == [2]


def test_cover_random_host():
    rng = np.random.default_rng(3)
    g = gen.random_regular(3000, 40, rng)
    for _ in range(3):
        X = set(rng.choice(3000, 25, replace=False).tolist())
        F = cover_bad_set(g, X, range(3000), 0.4)
        assert not cover_problems(g, X, range(3000), F)


@given(st.integers(0, 10**6))
def test_cover_small_hosts(seed):
    rng = np.random.default_rng(seed)
    g = gen.random_regular(60, 12, rng)
    X = set(rng.choice(60, int(rng.integers(1, 6)), replace=False).tolist())
    try:
        F = cover_bad_set(g, X, range(60), 2)
    except ForestStall:
        return
    assert not cover_problems(g, X, range(60), F)


def arc_rule_problems(g, H) -> list:
    """Replay the three arc rules from the contracted paths and plain vertices."""
    adj = graph_sets(g)
    k = H.z
    entry = list(H.tail) + H.plain.tolist()
    exit_ = list(H.head) + H.plain.tolist()
    arcs = set(H.arcs())
    out = []
    for u in range(H.n):
        for w in range(H.n):
            if u == w:
                continue
            touches = entry[w] in adj[exit_[u]]
            if u >= k and w >= k:
                both = (u, w) in arcs, (w, u) in arcs
                if touches and sum(both) != 1:
                    out.append(f"plain edge {u}-{w} oriented {both}")
                if not touches and any(both):
                    out.append(f"arc {u}-{w} without an edge")
            elif ((u, w) in arcs) != touches:
                out.append(f"arc rule broken at {u}->{w}")
    for i, p in enumerate(H.cover):
        if {H.head[i], H.tail[i]} != {p[0], p[-1]}:
            out.append(f"path {i} has wrong ends")
    return out


def test_contract_empty_cover_is_orientation(rng):
    g = gen.gnp(30, 0.3, rng)
    H = contract_and_orient(g, range(30), LinearForest([]), rng)
    assert H.z == 0 and H.m == g.m
    assert not arc_rule_problems(g, H)


def test_contract_single_path_both_heads():
    g = gen.complete(6)
    cover = LinearForest([[1, 0, 2]])
    heads = set()
    for seed in range(16):
        H = contract_and_orient(g, range(6), cover, seed)
        heads.add(H.head[0])
        assert not arc_rule_problems(g, H)
        assert H.expand([0]) in ([1, 0, 2], [2, 0, 1])
    assert heads == {1, 2}


def test_contract_rules_random_instance():
    rng = np.random.default_rng(11)
    g = gen.random_regular(200, 16, rng)
    X = set(rng.choice(200, 4, replace=False).tolist())
    cover = cover_bad_set(g, X, range(200), 2)
    H = contract_and_orient(g, range(200), cover, rng)
    assert not arc_rule_problems(g, H)


def test_contract_reproducible():
    g = gen.random_regular(100, 8, np.random.default_rng(1))
    a = contract_and_orient(g, range(100), LinearForest([]), 5)
    b = contract_and_orient(g, range(100), LinearForest([]), 5)
    assert a.arcs() == b.arcs()


def factor_problems(H, R) -> list:
    out = []
    seen = set()
    for j, f in enumerate(R.factors):
        if sorted(f.tolist()) != list(range(H.n)):
            out.append(f"factor {j} is not a permutation")
        for u, v in enumerate(f.tolist()):
            if not H.has_arc(u, v):
                out.append(f"factor {j} uses non-arc {u}->{v}")
            if (u, v) in seen:
                out.append(f"arc {u}->{v} used twice")
            seen.add((u, v))
    return out


def test_regular_subdigraph_examples():
    K = Digraph(6, [(i, j) for i in range(6) for j in range(6) if i != j])
    R = regular_subdigraph(K, 2)
    assert R.r == 2 and not factor_problems(K, R)
    C = Digraph(5, [(i, (i + 1) % 5) for i in range(5)])
    R = regular_subdigraph(C, 1)
    assert R.factors[0].tolist() == [1, 2, 3, 4, 0]


def test_regular_subdigraph_failure_witness():
    C = Digraph(5, [(i, (i + 1) % 5) for i in range(5)])
    with pytest.raises(RegularityFailure) as exc:
        regular_subdigraph(C, 2)
    assert exc.value.round == 1 and exc.value.violator
    star = Digraph(4, [(0, 1), (0, 2), (0, 3), (1, 0), (2, 0), (3, 0)])
    with pytest.raises(RegularityFailure) as exc:
        regular_subdigraph(star, 1)
    L = set(exc.value.violator)
    assert len(set().union(*(set(star.out(v).tolist()) for v in L))) < len(L)


def test_regular_subdigraph_random():
    rng = np.random.default_rng(2)
    g = gen.random_regular(600, 40, rng)
    H = random_orientation(g, rng)
    R = regular_subdigraph(H, 3)
    assert not factor_problems(H, R)
    D = R.digraph()
    assert (D.out_degrees() == 3).all() and (D.in_degrees() == 3).all()


def test_few_path_examples():
    ham = np.array([1, 2, 3, 4, 5, 0])
    assert len(few_path_forest([ham])) == 1
    two = np.array([1, 2, 0, 4, 5, 3])
    paths = few_path_forest([two])
    assert len(paths) == 2 and sorted(v for p in paths for v in p) == list(range(6))


def test_few_path_random_bound():
    rng = np.random.default_rng(7)
    n = 3000
    g = gen.random_regular(n, 40, rng)
    H = random_orientation(g, rng)
    R = regular_subdigraph(H, 3)
    paths = few_path_forest(R)
    assert sorted(v for p in paths for v in p) == list(range(n))
    assert all(H.has_arc(u, v) for p in paths for u, v in zip(p, p[1:]))
    assert len(paths) <= 4 * n / 3 ** 0.2


def test_merge_paths_keeps_ends_out_of_X(rng):
    g = gen.random_regular(400, 20, rng)
    perm = rng.permutation(400).tolist()
    X = set(perm[:5])
    singles = [[v] for v in perm if v not in X]
    merged = merge_paths(g, singles, X)
    F = LinearForest(merged)
    assert not F.problems(g, set(perm) - X)
    assert len(merged) < len(singles)


def test_spanning_forest_examples():
    g = gen.complete(12)
    F = spanning_forest_good_endpoints(g, set(), range(12), 2, 0)
    assert not F.problems(g, range(12), set()) and F.count == 1


def test_spanning_forest_random():
    rng = np.random.default_rng(9)
    n = 3000
    g = gen.random_regular(n, 40, rng)
    X = set(rng.choice(n, 25, replace=False).tolist())
    F = spanning_forest_good_endpoints(g, X, range(n), 0.4, rng)
    assert not F.problems(g, range(n), X)
    assert F.count <= 4 * n / (100 * math.log2(n))
    assert F.info["cover_paths"] >= 1


def test_spanning_forest_subset():
    rng = np.random.default_rng(10)
    g = gen.random_regular(800, 30, rng)
    Y = set(rng.choice(800, 500, replace=False).tolist())
    X = set(list(Y)[:6])
    F = spanning_forest_good_endpoints(g, X, Y, 0.3, rng)
    assert not F.problems(g, Y, X)
