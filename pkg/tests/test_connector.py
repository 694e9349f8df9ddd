import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import goodness_violations, graph_sets
from pseudoham import generators as gen
from pseudoham.absorber import find_disjoint_cycles
from pseudoham.config import DESK, ConnectorConfig
from pseudoham.connector import (ConnectionFailure, Digraph, EmbeddingStall, GoodEmbedding, PairList,
                                 PairListError, alt_path_spanning, arc_between_sets, build_aux,
                                 connect_pairs, dfs_long_path, fp_extend, fp_rollback, pairs_on,
                                 paths_disjoint, validate_alternating)
from pseudoham.graph import Graph
from pseudoham.matching import bipartite_matching


# --- matching ---------------------------------------------------------------

def kuhn(n_left, n_right, edges) -> int:
    adj = [[] for _ in range(n_left)]
    for u, v in edges:
        adj[u].append(v)
    mate = [-1] * n_right

    def aug(u, seen):
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                if mate[v] < 0 or aug(mate[v], seen):
                    mate[v] = u
                    return True
        return False

    return sum(aug(u, set()) for u in range(n_left))


@given(st.integers(0, 10**6), st.integers(1, 12), st.integers(1, 12), st.floats(0.05, 0.6))
def test_matching_size_and_violator(seed, nl, nr, p):
    rng = np.random.default_rng(seed)
    edges = [(u, v) for u in range(nl) for v in range(nr) if rng.random() < p]
    res = bipartite_matching(nl, nr, edges)
    assert res.size == kuhn(nl, nr, edges)
    m = res.match
    assert len({int(v) for v in m if v >= 0}) == res.size
    assert all((u, int(v)) in set(edges) for u, v in enumerate(m) if v >= 0)
    if res.perfect:
        assert res.size == nl
    else:
        L = set(res.violator)
        N = {v for u, v in edges if u in L}
        assert len(N) < len(L)


# --- auxiliary digraph -------------------------------------------------------

def test_pairlist_rejects_overlap():
    with pytest.raises(PairListError):
        PairList([(0, 1), (1, 2)])
    M = PairList([(0, 1), (2, 2)])
    assert M.partner[2] == 2 and M.vertices == {0, 1, 2}


def test_aux_rules_replayed(rng):
    g = gen.random_regular(400, 24, rng)
    perm = rng.permutation(400)
    pairs = [tuple(p) for p in perm[:98].reshape(-1, 2).tolist()] + [(int(perm[98]), int(perm[98]))]
    M = PairList(pairs)
    scope = perm[99:160].tolist()
    H = build_aux(g, M, scope=scope, rng=rng)
    adj = graph_sets(g)
    red, blue = H.red.tolist(), H.blue.tolist()
    for i, (x, y) in enumerate(pairs):
        assert {red[i], blue[i]} == {x, y}
    arcs = set(H.arcs())
    want = set()
    for u in range(H.n):
        hu = int(H.host[u])
        for i in range(len(pairs)):
            if i != u and blue[i] in adj[hu]:
                want.add((u, i))
    assert arcs == want
    # any directed path of red vertices lifts to an alternating path
    chain = dfs_long_path(H, range(H.k))
    ok, why = validate_alternating(g, M, H.lift(chain))
    assert ok, why


def test_dfs_examples():
    T = Digraph(6, [(i, j) for i in range(6) for j in range(i + 1, 6)])
    assert dfs_long_path(T) == list(range(6))
    assert len(dfs_long_path(Digraph(4, []))) == 1
    assert arc_between_sets(Digraph(4, []), 1, 0, 100) == 0.0


def test_dfs_long_path_gnp_orientation():
    rng = np.random.default_rng(8)
    g = gen.gnp(500, 0.1, rng)
    e = g.edge_array()
    flip = rng.random(len(e)) < 0.5
    arcs = np.where(flip[:, None], e[:, ::-1], e)
    H = Digraph(500, arcs)
    assert arc_between_sets(H, 30, rng, 1000) == 1.0
    path = dfs_long_path(H)
    assert len(path) >= 500 - 2 * 30 + 1
    assert len(set(path)) == len(path)
    assert all(H.has_arc(u, v) for u, v in zip(path, path[1:]))


def test_alt_path_uses_chain_of_pairs():
    g = gen.path_graph(8)
    M = PairList([(0, 1), (2, 3), (4, 5), (6, 7)])
    H = build_aux(g, M, scope=(), colouring=[False] * 4)
    alt = alt_path_spanning(g, M, H=H)
    assert sorted(alt.pairs) == [0, 1, 2, 3]
    assert validate_alternating(g, M, alt.vertices)[0]


def test_alt_path_single_pair_trivial():
    g = gen.complete(4)
    alt = alt_path_spanning(g, PairList([(0, 1)]), rng=0)
    assert alt.pairs == [0] and set(alt.vertices) == {0, 1}


def test_alt_path_triangles_large():
    g = gen.random_regular(3000, 30, np.random.default_rng(2))
    tris = find_disjoint_cycles(g, 3, target=200)
    assert len(tris) == 200
    M = PairList([(c.order[1], c.order[2]) for c in tris])
    alt = alt_path_spanning(g, M, rng=1)
    k = int(np.ceil(estimate_ratio(g)))
    assert len(alt.pairs) >= len(M) - 2 * k + 1
    assert validate_alternating(g, M, alt.vertices)[0]
    assert pairs_on(M, alt.vertices) == alt.pairs


def estimate_ratio(g):
    from pseudoham.spectral import estimate_lambda
    return estimate_lambda(g, 1e-6).ratio


def test_validate_alternating_rejects():
    g = gen.complete(6)
    M = PairList([(0, 1), (2, 3)])
    assert validate_alternating(g, M, [0, 1, 2, 3])[0]
    assert not validate_alternating(g, M, [0, 2, 1, 3])[0]
    assert validate_alternating(g, M, [4, 0, 1, 5], terminals=True)[0]
    assert not validate_alternating(g, M, [0, 1, 5], terminals=True)[0]
    h = Graph(6, [(0, 1), (2, 3)])
    assert not validate_alternating(h, M, [0, 1, 2, 3])[0]       # 1-2 is not an edge


# --- good embeddings ---------------------------------------------------------

def oracle_state(emb):
    H = emb.H
    outs = [set(H.out(v).tolist()) for v in range(H.n)]
    used = set(np.flatnonzero(emb.used).tolist())
    return outs, used, emb.deg.tolist()


def assert_good(emb):
    outs, used, deg = oracle_state(emb)
    rep = emb.check()
    assert rep.exhaustive
    assert rep.ok == (not goodness_violations(outs, used, deg, emb.s, emb.D))
    assert rep.ok


def complete_digraph(n):
    return Digraph(n, [(i, j) for i in range(n) for j in range(n) if i != j])


def test_empty_forest_is_good():
    emb = GoodEmbedding(complete_digraph(6), 2, 2)
    assert_good(emb)
    emb.add_root(3)
    assert_good(emb)


def test_grow_binary_tree_in_complete_digraph():
    # three unused vertices need 9 free out-neighbours once 7 are embedded
    emb = GoodEmbedding(complete_digraph(16), 3, 3)
    root = 0
    emb.add_root(root)
    frontier = [root]
    kids = {root: 0}
    while emb.size < 7:
        p = frontier[0]
        c = emb.extend(p)
        assert_good(emb)
        kids[p] += 1
        kids[c] = 0
        frontier.append(c)
        if kids[p] == 2:
            frontier.pop(0)
    assert emb.size == 7


def test_bottleneck_rejected():
    # vertex 1 is the only out-neighbour of 3, so embedding it starves {3}
    H = Digraph(6, [(0, 1), (3, 1), (2, 4), (4, 5), (5, 2)])
    emb = GoodEmbedding(H, 1, 1)
    emb.add_root(0)
    with pytest.raises(EmbeddingStall):
        emb.extend(0)
    emb._attach(0, 1)
    outs, used, deg = oracle_state(emb)
    assert (3,) in goodness_violations(outs, used, deg, 1, 1)


def test_extend_rollback_round_trip():
    emb = GoodEmbedding(complete_digraph(12), 2, 3)
    emb.add_root(0)
    before = emb.image()
    fp_extend(emb, 0)
    leaf = emb.last
    fp_rollback(emb, leaf)
    assert emb.image() == before and emb.deg.sum() == 0
    fp_extend(emb, 0)
    fp_extend(emb, emb.last)
    with pytest.raises(EmbeddingStall):
        emb.rollback([v for v, p in emb.image().items() if p == 0][0])     # internal vertex


def test_demolish_keeps_goodness(rng):
    for _ in range(20):
        n = int(rng.integers(8, 13))
        H = Digraph(n, [(i, j) for i in range(n) for j in range(n) if i != j and rng.random() < 0.7])
        emb = GoodEmbedding(H, 2, 3)
        emb.add_root(0)
        if not emb.check().ok:
            continue
        order = []
        for _ in range(n):
            nodes = [v for v in emb.image() if emb.deg[v] < 3]
            try:
                fp_extend(emb, int(rng.choice(nodes)))
                order.append(emb.last)
            except EmbeddingStall:
                break
            assert_good(emb)
        while True:
            leaves = [v for v, p in emb.image().items() if p is not None and not emb.children[v]]
            if not leaves:
                break
            fp_rollback(emb, leaves[0])
            assert_good(emb)


# --- connecting ----------------------------------------------------------------

def test_connect_single_pair():
    g = Graph(4, [(0, 1), (2, 3)])
    res = connect_pairs(g, PairList([(1, 2)]), [(0, 3)], rng=0, cfg=DESK.connector)
    assert res.paths == [[0, 1, 2, 3]]
    assert validate_alternating(g, PairList([(1, 2)]), res.paths[0], terminals=True)[0]


def test_connect_failure_names_pair():
    g = Graph(6, [(0, 1), (2, 3)])
    cfg = ConnectorConfig(colourings=3, search_fallback=True)
    with pytest.raises(ConnectionFailure) as exc:
        connect_pairs(g, PairList([(1, 2)]), [(0, 3), (4, 5)], rng=0, cfg=cfg)
    assert exc.value.index == 1 and exc.value.paths == [[0, 1, 2, 3]]


def test_connect_rejects_bad_terminals():
    g = gen.complete(6)
    with pytest.raises(PairListError):
        connect_pairs(g, PairList([(0, 1)]), [(1, 2)])
    with pytest.raises(PairListError):
        connect_pairs(g, PairList([(0, 1)]), [(2, 2)])


@pytest.mark.parametrize("fallback", [False, True])
def test_connect_random_host(fallback):
    rng = np.random.default_rng(4)
    g = gen.random_regular(1000, 20, rng)
    perm = rng.permutation(1000)
    M = PairList(perm[:300].reshape(-1, 2))
    T = [tuple(t) for t in perm[300:310].reshape(-1, 2).tolist()]
    cfg = ConnectorConfig(tree_frac=1 / 12, tree_min=16, search_fallback=fallback)
    res = connect_pairs(g, M, T, rng, cfg)
    assert len(res.paths) == 5 and paths_disjoint(res.paths)
    for (a, b), p in zip(T, res.paths):
        assert p[0] == a and p[-1] == b
        assert validate_alternating(g, M, p, terminals=True)[0]
    if not fallback:
        assert res.searched == 0


def test_shared_terminal_allowed():
    g = gen.complete(12)
    M = PairList([(0, 1), (2, 3), (4, 5), (6, 7)])
    res = connect_pairs(g, M, [(8, 9), (9, 10)], rng=1, cfg=DESK.connector)
    assert paths_disjoint(res.paths, shared={9})
    assert not set(res.paths[0][1:-1]) & set(res.paths[1][1:-1])
