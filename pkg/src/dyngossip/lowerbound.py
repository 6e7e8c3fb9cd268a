"""Local-broadcast lower-bound construction: K' sets, potential, free edges.

Knowledge is held as boolean ``(n, k)`` matrices.  A token assignment is an
integer array of length n holding the broadcast token per node, or -1 for a
silent node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from . import rng as _rng
from .errors import ConstructionError
from .graph import UnionFind, edge

SILENT = -1


@dataclass
class KnowledgeState:
    K: np.ndarray
    Kprime: np.ndarray

    def __post_init__(self):
        self.K = np.asarray(self.K, dtype=bool)
        self.Kprime = np.asarray(self.Kprime, dtype=bool)
        if self.K.shape != self.Kprime.shape or self.K.ndim != 2:
            raise ValueError("K and K' must be (n, k) matrices of the same shape")

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def k(self) -> int:
        return self.K.shape[1]

    @classmethod
    def from_sets(cls, K: Sequence, Kprime: Sequence, k: int) -> "KnowledgeState":
        return cls(_to_matrix(K, k), _to_matrix(Kprime, k))


def _to_matrix(sets: Sequence, k: int) -> np.ndarray:
    m = np.zeros((len(sets), k), dtype=bool)
    for v, s in enumerate(sets):
        for t in s:
            m[v, t] = True
    return m


def as_assignment(assignment, n: int) -> np.ndarray:
    """Normalise a mapping/sequence with None or -1 for silence to an int array."""
    a = np.full(n, SILENT, dtype=np.int64)
    items = assignment.items() if isinstance(assignment, Mapping) else enumerate(assignment)
    for v, t in items:
        if t is not None and t >= 0:
            a[v] = t
    return a


def sample_kprime(n: int, k: int, p: float, seed: int) -> np.ndarray:
    """Each (node, token) pair independently in K' with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return _rng.stream(seed, _rng.KPRIME).random((n, k)) < p


def potential(state: KnowledgeState) -> int:
    return int((state.K | state.Kprime).sum())


def free_matrix(assignment, known: np.ndarray) -> np.ndarray:
    """Symmetric (n, n) mask of free potential edges.

    ``known`` is K | K'.  {u, v} is free iff each endpoint is silent or
    broadcasts a token the other endpoint already has in K or K'.
    """
    n = known.shape[0]
    a = as_assignment(assignment, n)
    silent = a < 0
    idx = np.where(silent, 0, a)
    if known.shape[1] == 0:
        ok = np.broadcast_to(silent[:, None], (n, n)).copy()
    else:
        # ok[u, v]: v can absorb u's broadcast without potential gain
        ok = known.T[idx] | silent[:, None]
    free = ok & ok.T
    np.fill_diagonal(free, False)
    return free


def _edges_of(mask: np.ndarray) -> frozenset:
    iu, ju = np.nonzero(np.triu(mask, 1))
    return frozenset(zip(iu.tolist(), ju.tolist()))


def _components(n: int, edges) -> list[list[int]]:
    uf = UnionFind(n)
    for u, v in edges:
        uf.union(u, v)
    return uf.components()


def free_graph(assignment, state: KnowledgeState) -> tuple[frozenset, int]:
    """All free edges and the number of connected components they leave."""
    free = _edges_of(free_matrix(assignment, state.K | state.Kprime))
    return free, len(_components(state.n, free))


def connectors(comps: list[list[int]]) -> frozenset:
    """l-1 edges chaining the minimum-ID members of components in ascending order."""
    reps = sorted(c[0] for c in comps)
    return frozenset(edge(a, b) for a, b in zip(reps, reps[1:]))


def adversary_graph(assignment, state: KnowledgeState) -> tuple[frozenset, frozenset, int]:
    """(free edges, connector edges, component count of the free graph)."""
    free, _ = free_graph(assignment, state)
    comps = _components(state.n, free)
    return free, connectors(comps), len(comps)


def deliver_broadcasts(assignment, K: np.ndarray, edges) -> np.ndarray:
    """Knowledge after every broadcaster reaches its neighbours over ``edges``."""
    n = K.shape[0]
    a = as_assignment(assignment, n)
    out = K.copy()
    for u, v in edges:
        if a[u] >= 0:
            out[v, a[u]] = True
        if a[v] >= 0:
            out[u, a[v]] = True
    return out


def sparse_limit(n: int, c: float) -> int:
    """Largest broadcaster count of a c-sparse assignment: floor(n / (c log2 n))."""
    if n < 2:
        return n
    return int(math.floor(n / (c * math.log2(n))))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class LabStats:
    n: int
    k: int
    p: float
    c: float
    trials: int
    beta: int
    connected_fraction: float
    connected_ci: tuple
    max_components: int
    mean_components: float
    phi0_ok_fraction: float
    rows: list = field(default_factory=list, repr=False)


LAB_COLUMNS = ("n", "k", "p", "c", "trial", "sparse", "connected", "components", "phi0", "phi0_bound_ok")


def sparse_connectivity_experiment(n: int, k: int, p: float, c: float, trials: int, seed: int) -> LabStats:
    """Monte-Carlo check of the two free-graph lemmas on random assignments.

    Per trial: sample K' with probability p; draw initial knowledge with
    exactly floor(k/2) tokens per node for the Phi(0) check; then test one
    c-sparse assignment (floor(n/(c log2 n)) broadcasters, uniform tokens,
    K empty) for connectivity of the free graph, and one dense assignment
    (every node broadcasts a uniform token, K empty) for its component count.
    Random assignments are a weaker test than the all-assignments statement.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    beta = sparse_limit(n, c)
    rows = []
    connected = 0
    comps_dense = []
    phi_ok = 0
    for trial in range(trials):
        g = _rng.stream(seed, _rng.LAB, n, k, trial)
        kp = g.random((n, k)) < p
        k0 = np.zeros((n, k), dtype=bool)
        half = k // 2
        if half:
            picks = np.argsort(g.random((n, k)), axis=1)[:, :half]
            np.put_along_axis(k0, picks, True, axis=1)
        phi0 = int((k0 | kp).sum())
        ok = phi0 <= 0.8 * n * k
        phi_ok += ok
        empty = KnowledgeState(np.zeros((n, k), dtype=bool), kp)

        sparse = np.full(n, SILENT, dtype=np.int64)
        if beta and k:
            who = g.choice(n, size=beta, replace=False)
            sparse[who] = g.integers(0, k, size=beta)
        _, ell_sparse = free_graph(sparse, empty)
        connected += ell_sparse == 1
        rows.append(dict(n=n, k=k, p=p, c=c, trial=trial, sparse=1, connected=int(ell_sparse == 1),
                         components=ell_sparse, phi0=phi0, phi0_bound_ok=int(ok)))

        dense = g.integers(0, k, size=n) if k else np.full(n, SILENT, dtype=np.int64)
        _, ell_dense = free_graph(dense, empty)
        comps_dense.append(ell_dense)
        rows.append(dict(n=n, k=k, p=p, c=c, trial=trial, sparse=0, connected=int(ell_dense == 1),
                         components=ell_dense, phi0=phi0, phi0_bound_ok=int(ok)))

    return LabStats(
        n=n, k=k, p=p, c=c, trials=trials, beta=beta,
        connected_fraction=connected / trials,
        connected_ci=wilson_interval(connected, trials),
        max_components=max(comps_dense),
        mean_components=float(np.mean(comps_dense)),
        phi0_ok_fraction=phi_ok / trials,
        rows=rows,
    )


def fit_log_growth(ns: Sequence[int], values: Sequence[float]) -> float:
    """Smallest a with value <= a * log2(n) at every given point."""
    return max(v / math.log2(n) for n, v in zip(ns, values))


@dataclass
class RoundRecord:
    round: int
    phi_before: int
    phi_after: int
    components: int
    broadcasters: int
    sparse: bool

    @property
    def delta(self) -> int:
        return self.phi_after - self.phi_before


def progress_cap_run(
    schedule: Callable[[int, np.ndarray], object],
    state: KnowledgeState,
    rounds: int,
    c: float = 4.0,
) -> list[RoundRecord]:
    """Drive a broadcast schedule against the free-edge adversary.

    ``schedule(r, K)`` returns the round-r assignment; broadcasters must
    hold their token.  Every round asserts Phi grows by at most 2(l - 1),
    and by nothing when the assignment is c-sparse and the free graph is
    connected.  Raises ConstructionError on a violation.
    """
    K = state.K.copy()
    n = state.n
    limit = sparse_limit(n, c)
    records = []
    for r in range(1, rounds + 1):
        a = as_assignment(schedule(r, K.copy()), n)
        talking = np.nonzero(a >= 0)[0]
        if len(talking) and not K[talking, a[talking]].all():
            raise ValueError(f"round {r}: schedule broadcasts a token the node does not hold")
        cur = KnowledgeState(K, state.Kprime)
        free, conn, ell = adversary_graph(a, cur)
        before = potential(cur)
        K = deliver_broadcasts(a, K, free | conn)
        after = potential(KnowledgeState(K, state.Kprime))
        sparse = len(talking) <= limit
        if after - before > 2 * (ell - 1):
            raise ConstructionError(f"round {r}: potential grew by {after - before} > 2(l-1) = {2 * (ell - 1)}")
        if sparse and ell == 1 and after != before:
            raise ConstructionError(f"round {r}: sparse round with connected free graph changed the potential")
        records.append(RoundRecord(r, before, after, ell, len(talking), sparse))
    return records


def random_schedule(seed: int, rate: float = 1.0) -> Callable[[int, np.ndarray], np.ndarray]:
    """Each node with a token broadcasts a uniformly chosen known token with probability ``rate``."""
    g = _rng.stream(seed, _rng.LAB, 0xB0)

    def schedule(r, K):
        n = K.shape[0]
        a = np.full(n, SILENT, dtype=np.int64)
        for v in range(n):
            held = np.nonzero(K[v])[0]
            if len(held) and g.random() < rate:
                a[v] = held[g.integers(len(held))]
        return a

    return schedule


def silent_schedule(r, K):
    return np.full(K.shape[0], SILENT, dtype=np.int64)
