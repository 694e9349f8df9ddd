"""Bipartite matchings with Hall-violator diagnostics."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import maximum_bipartite_matching


@dataclass
class MatchResult:
    match: np.ndarray             # left vertex -> right vertex or -1
    size: int
    violator: list | None = None  # left set L with |N(L)| < |L| when the matching is not left-perfect

    @property
    def perfect(self) -> bool:
        return self.violator is None


def _csr(n_left: int, n_right: int, edges) -> sp.csr_matrix:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    data = np.ones(len(e), dtype=np.int8)
    m = sp.csr_matrix((data, (e[:, 0], e[:, 1])), shape=(n_left, n_right))
    m.sum_duplicates()
    m.sort_indices()
    return m


def hall_violator(m: sp.csr_matrix, match: np.ndarray) -> list:
    """Left vertices reachable from unmatched left vertices by alternating
    paths.  For a maximum matching their neighbourhood is strictly smaller."""
    n_left, n_right = m.shape
    mate_r = np.full(n_right, -1, dtype=np.int64)
    ok = match >= 0
    mate_r[match[ok]] = np.flatnonzero(ok)
    seen_l = np.zeros(n_left, dtype=bool)
    seen_r = np.zeros(n_right, dtype=bool)
    queue = deque(np.flatnonzero(~ok).tolist())
    seen_l[~ok] = True
    while queue:
        u = queue.popleft()
        for v in m.indices[m.indptr[u]:m.indptr[u + 1]].tolist():
            if seen_r[v]:
                continue
            seen_r[v] = True
            w = int(mate_r[v])
            if w >= 0 and not seen_l[w]:
                seen_l[w] = True
                queue.append(w)
    return np.flatnonzero(seen_l).tolist()


def bipartite_matching(n_left: int, n_right: int, edges) -> MatchResult:
    """Maximum matching of a bipartite graph given as (left, right) pairs."""
    m = _csr(n_left, n_right, edges)
    match = np.asarray(maximum_bipartite_matching(m, perm_type="column"), dtype=np.int64)
    size = int((match >= 0).sum())
    violator = hall_violator(m, match) if size < n_left else None
    return MatchResult(match, size, violator)


def neighbourhood(n_left: int, n_right: int, edges, left) -> set:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    keep = np.isin(e[:, 0], np.asarray(list(left), dtype=np.int64))
    return set(e[keep, 1].tolist())
