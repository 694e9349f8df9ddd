"""Second-eigenvalue estimation, expander-mixing audits and cleaning processes."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, mask

log = logging.getLogger(__name__)


class NotRegularError(ValueError):
    pass


class AuditFailure(AssertionError):
    pass


class CleaningError(RuntimeError):
    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


@dataclass(frozen=True)
class SpectralCertificate:
    n: int
    d: int
    lam: float
    tolerance: float
    method: str
    converged: bool = True

    def issues(self) -> list:
        """Inconsistencies that no real graph could produce."""
        out = []
        if self.lam > self.d + self.tolerance:
            out.append("lambda exceeds d")
        if self.lam < -self.tolerance:
            out.append("negative lambda")
        if self.n > 1 and self.d < self.n / 2:
            floor = math.sqrt(self.d * (self.n - self.d) / (self.n - 1))
            if self.lam < floor - self.tolerance:
                out.append(f"lambda below the trace lower bound {floor:.6f}")
        if not self.converged:
            out.append("iteration did not converge")
        return out

    @property
    def ratio(self) -> float:
        """lambda * n / d, the scale at which mixing guarantees kick in."""
        return self.lam * self.n / self.d if self.d else math.inf

    def to_json(self) -> str:
        obj = {"n": self.n, "d": self.d, "lambda": self.lam, "tolerance": self.tolerance,
               "method": self.method}
        if not self.converged:
            obj["converged"] = False
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text: str) -> "SpectralCertificate":
        obj = json.loads(text)
        return cls(int(obj["n"]), int(obj["d"]), float(obj["lambda"]), float(obj["tolerance"]),
                   obj["method"], bool(obj.get("converged", True)))


def _require_regular(g: Graph) -> int:
    if g.regular_degree is None:
        raise NotRegularError("graph is not regular; degrees range over "
                              f"{int(g.degree.min())}..{int(g.degree.max())}")
    return g.regular_degree


def lambda_dense(g: Graph) -> float:
    """max |mu| over all eigenvalues except one copy of the top eigenvalue d."""
    if g.n <= 1:
        return 0.0
    ev = np.linalg.eigvalsh(g.dense())
    return float(max(abs(ev[0]), abs(ev[-2])))


def _lanczos_extremes(matvec, n, rng, tol, window, max_restarts):
    """Smallest and largest eigenvalue of a symmetric operator restricted to
    the complement of the all-ones vector, by restarted Lanczos with full
    reorthogonalisation.  Returns (lo, hi, converged)."""
    ones = np.full(n, 1.0 / math.sqrt(n))

    def project(x):
        return x - ones * (ones @ x)

    start = project(rng.standard_normal(n))
    window = min(window, n - 1)
    lo = hi = 0.0
    for _ in range(max_restarts):
        V = np.zeros((n, window + 1))
        alpha, beta = [], []
        V[:, 0] = start / np.linalg.norm(start)
        m = 0
        for j in range(window):
            w = project(matvec(V[:, j]))
            a = V[:, j] @ w
            w -= a * V[:, j]
            if j > 0:
                w -= beta[-1] * V[:, j - 1]
            # two passes of full reorthogonalisation
            for _pass in range(2):
                w -= V[:, :j + 1] @ (V[:, :j + 1].T @ w)
                w = project(w)
            alpha.append(a)
            b = np.linalg.norm(w)
            m = j + 1
            if b < 1e-10:
                # invariant subspace; continue with a fresh orthogonal direction
                fresh = project(rng.standard_normal(n))
                fresh -= V[:, :j + 1] @ (V[:, :j + 1].T @ fresh)
                fb = np.linalg.norm(fresh)
                if m >= n - 1 or fb < 1e-10:
                    beta.append(0.0)
                    break
                beta.append(0.0)
                V[:, j + 1] = fresh / fb
                continue
            beta.append(b)
            V[:, j + 1] = w / b
        T = np.diag(alpha) + np.diag(beta[:m - 1], 1) + np.diag(beta[:m - 1], -1)
        theta, S = np.linalg.eigh(T)
        lo, hi = theta[0], theta[-1]
        b_last = beta[m - 1] if len(beta) >= m else 0.0
        res_lo = abs(b_last * S[-1, 0])
        res_hi = abs(b_last * S[-1, -1])
        if max(res_lo, res_hi) < tol or m >= n - 1:
            return float(lo), float(hi), True
        y_lo = V[:, :m] @ S[:, 0]
        y_hi = V[:, :m] @ S[:, -1]
        start = project(y_lo + y_hi)
    return float(lo), float(hi), False


def estimate_lambda(g: Graph, tol: float = 1e-8, *, exact_threshold: int = 600,
                    method: str | None = None, rng=None, window: int = 120,
                    max_restarts: int = 60) -> SpectralCertificate:
    d = _require_regular(g)
    if method is None:
        method = "exact-dense" if g.n <= exact_threshold else "iterative-deflated"
    if method == "exact-dense":
        return SpectralCertificate(g.n, d, lambda_dense(g), tol, method)
    if method != "iterative-deflated":
        raise ValueError(f"unknown method {method!r}")
    if g.n <= 2:
        return SpectralCertificate(g.n, d, lambda_dense(g), tol, method)
    rng = np.random.default_rng(rng if rng is not None else 12345)
    A = g.adjacency()
    lo, hi, ok = _lanczos_extremes(lambda x: A @ x, g.n, rng, tol, window, max_restarts)
    if not ok:
        log.warning("Lanczos did not reach residual %.1e", tol)
    return SpectralCertificate(g.n, d, max(abs(lo), abs(hi)), tol, method, ok)


# --- mixing audit ----------------------------------------------------------

@dataclass
class Violation:
    part: int
    size_a: int
    size_b: int
    observed: float
    bound: float


@dataclass
class MixingReport:
    trials: int
    checked: dict = field(default_factory=lambda: {1: 0, 2: 0, 3: 0, 4: 0})
    violations: list = field(default_factory=list)
    max_ratio: dict = field(default_factory=lambda: {1: 0.0, 2: 0.0, 3: 0.0})

    @property
    def passed(self) -> bool:
        return not self.violations


def _random_masks(rng, n, sizes):
    keys = rng.random((len(sizes), n))
    ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
    return ranks < np.asarray(sizes)[:, None]


def mixing_check_pairs(g: Graph, cert: SpectralCertificate, A: np.ndarray, B: np.ndarray,
                       report: MixingReport, slack: float) -> None:
    """Check parts 1, 2 and 4 for the rows of the boolean masks A, B, and part 3 for A."""
    d, n, lam = cert.d, cert.n, cert.lam
    M = g.adjacency()
    Af = A.astype(np.float64)
    Bf = B.astype(np.float64)
    MA = (M @ Af.T).T
    eAB = np.einsum("ij,ij->i", MA, Bf)
    eA = np.einsum("ij,ij->i", MA, Af) / 2.0
    a = A.sum(axis=1).astype(np.float64)
    b = B.sum(axis=1).astype(np.float64)

    dev1 = np.abs(eAB - d * a * b / n)
    bound1 = lam * np.sqrt(a * b) + slack
    dev2 = np.abs(eA - d * a * a / (2 * n))
    bound2 = lam * a / 2 + slack
    small = a <= lam * n / d
    big = a * b > (lam * n / d) ** 2
    report.checked[1] += len(a)
    report.checked[2] += len(a)
    report.checked[3] += int(small.sum())
    report.checked[4] += int(big.sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        report.max_ratio[1] = max(report.max_ratio[1], float(np.nanmax(np.where(bound1 > 0, dev1 / bound1, 0))))
        report.max_ratio[2] = max(report.max_ratio[2], float(np.nanmax(np.where(bound2 > 0, dev2 / bound2, 0))))
    for i in np.flatnonzero(dev1 > bound1):
        report.violations.append(Violation(1, int(a[i]), int(b[i]), float(dev1[i]), float(bound1[i])))
    for i in np.flatnonzero(dev2 > bound2):
        report.violations.append(Violation(2, int(a[i]), int(a[i]), float(dev2[i]), float(bound2[i])))
    bound3 = lam * a + slack
    for i in np.flatnonzero(small & (eA > bound3)):
        report.violations.append(Violation(3, int(a[i]), int(a[i]), float(eA[i]), float(bound3[i])))
    for i in np.flatnonzero(big & (eAB <= 0)):
        report.violations.append(Violation(4, int(a[i]), int(b[i]), 0.0, 1.0))


def mixing_audit(g: Graph, cert: SpectralCertificate, trials: int = 1000, rng=None, *,
                 pairs=None, policy: str = "warn", batch: int = 512) -> MixingReport:
    """Sample set pairs and test the four expander-mixing inequalities.

    Half the single sets are drawn with size at most lambda*n/d so that the
    small-set edge bound is actually exercised.  ``pairs`` adds explicit
    (A, B) pairs to the sample.  A violation means the certificate is wrong.
    """
    rng = np.random.default_rng(rng)
    n = g.n
    slack = cert.tolerance + 1e-9
    report = MixingReport(trials)
    small_cap = max(1, min(n, int(cert.lam * n / cert.d))) if cert.d else n
    done = 0
    while done < trials:
        t = min(batch, trials - done)
        sa = rng.integers(1, n + 1, size=t)
        half = rng.random(t) < 0.5
        sa[half] = rng.integers(1, small_cap + 1, size=int(half.sum()))
        sb = rng.integers(1, n + 1, size=t)
        mixing_check_pairs(g, cert, _random_masks(rng, n, sa), _random_masks(rng, n, sb), report, slack)
        done += t
    if pairs:
        A = np.stack([mask(n, a) for a, _ in pairs])
        B = np.stack([mask(n, b) for _, b in pairs])
        mixing_check_pairs(g, cert, A, B, report, slack)
    if report.violations:
        msg = f"{len(report.violations)} mixing violations, first {report.violations[0]}"
        if policy == "raise":
            raise AuditFailure(msg)
        log.warning(msg)
    return report


# --- cleaning --------------------------------------------------------------

@dataclass
class CleanResult:
    kept: frozenset
    removed: tuple
    threshold: float
    bound: float | None
    within_bound: bool


def _params(g, cert, d):
    if d is None:
        d = cert.d if cert is not None else (g.regular_degree if g.regular_degree is not None else g.mean_degree)
    lam = cert.lam if cert is not None else None
    return d, lam


def clean_subset(g: Graph, S, *, cert: SpectralCertificate | None = None, d: float | None = None,
                 threshold: float | None = None, slack: float = 2.0) -> CleanResult:
    """Repeatedly delete the lowest-index vertex of ``S`` with fewer than
    ``threshold`` neighbours in what remains (default ``d|S|/4n``)."""
    S = frozenset(S)
    d, lam = _params(g, cert, d)
    if threshold is None:
        threshold = d * len(S) / (4 * g.n)
    if lam is not None and len(S) < 5 * lam * g.n / d:
        log.info("clean_subset: |S|=%d below 5*lambda*n/d=%.1f", len(S), 5 * lam * g.n / d)
    cur = mask(g.n, S)
    deg_in = np.asarray(g.adjacency() @ cur.astype(np.float64)).round().astype(np.int64)
    removed = []
    while True:
        low = np.flatnonzero(cur & (deg_in < threshold))
        if low.size == 0:
            break
        v = int(low[0])
        cur[v] = False
        deg_in[g.neighbors(v)] -= 1
        removed.append(v)
    bound = slack * lam * g.n / d if lam is not None else None
    kept = frozenset(np.flatnonzero(cur).tolist())
    res = CleanResult(kept, tuple(removed), threshold, bound,
                      bound is None or len(removed) <= bound)
    if not kept and S:
        raise CleaningError("cleaning exhausted the set", res)
    if not res.within_bound:
        log.warning("cleaning removed %d vertices, more than the %.1f allowed", len(removed), bound)
    return res


@dataclass
class PairCleanResult:
    kept: list
    removed: list
    threshold: float
    bound: float | None
    within_bound: bool


def pair_clean(g: Graph, pairs, *, cert: SpectralCertificate | None = None, d: float | None = None,
               threshold: float | None = None, slack: float = 2.0) -> PairCleanResult:
    """Cleaning on the union of a list of vertex pairs; a pair leaves as soon as
    either of its vertices drops below the threshold.  Pairs ``(a, a)`` are
    single vertices."""
    pairs = [tuple(p) for p in pairs]
    owner = {}
    for i, (x, y) in enumerate(pairs):
        for v in {x, y}:
            if v in owner:
                raise ValueError(f"pairs overlap at vertex {v}")
            owner[v] = i
    d, lam = _params(g, cert, d)
    if threshold is None:
        threshold = d * len(owner) / (4 * g.n)
    cur = mask(g.n, owner)
    deg_in = np.asarray(g.adjacency() @ cur.astype(np.float64)).round().astype(np.int64)
    alive = [True] * len(pairs)
    removed = []
    while True:
        low = np.flatnonzero(cur & (deg_in < threshold))
        if low.size == 0:
            break
        i = owner[int(low[0])]
        alive[i] = False
        removed.append(pairs[i])
        for v in set(pairs[i]):
            cur[v] = False
            deg_in[g.neighbors(v)] -= 1
    kept = [p for p, ok in zip(pairs, alive) if ok]
    bound = slack * lam * g.n / d if lam is not None else None
    res = PairCleanResult(kept, removed, threshold, bound, bound is None or len(removed) <= bound)
    if not kept and pairs:
        raise CleaningError("pair cleaning removed every pair", res)
    return res


# --- small-set expansion ---------------------------------------------------

@dataclass(frozen=True)
class ExpansionScale:
    """Constants of the small-set expansion statement; the defaults are the
    asymptotic ones, which no desk-size graph can satisfy."""
    lam_factor: float = 10.0      # delta >= lam_factor * lambda
    size_factor: float = 100.0    # |A| <= delta * n / (size_factor * d)


@dataclass
class ExpansionResult:
    status: str                   # "pass", "fail" or "precondition"
    observed: int
    required: float
    reason: str = ""

    def __bool__(self):
        return self.status == "pass"


def expansion_check(g: Graph, A, B, delta: float, cert: SpectralCertificate,
                    scale: ExpansionScale = ExpansionScale()) -> ExpansionResult:
    A, B = frozenset(A), frozenset(B)
    n, d, lam = cert.n, cert.d, cert.lam
    mb = mask(g.n, B)
    low = [v for v in A if int(mb[g.neighbors(v)].sum()) < delta]
    if low:
        return ExpansionResult("precondition", 0, 0.0, f"vertex {min(low)} has fewer than delta neighbours in B")
    if len(A) > delta * n / (scale.size_factor * d):
        return ExpansionResult("precondition", 0, 0.0, "A too large")
    if delta < scale.lam_factor * lam:
        return ExpansionResult("precondition", 0, 0.0, "delta too small relative to lambda")
    nbrs = set()
    for v in A:
        nbrs.update(g.neighbors(v).tolist())
    observed = len(nbrs & B)
    need = min(delta ** 2 * len(A) / (8 * lam ** 2) if lam > 0 else math.inf, delta * n / (10 * d))
    return ExpansionResult("pass" if observed >= need else "fail", observed, need)
