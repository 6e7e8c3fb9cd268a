"""Adversaries: who picks E_r, and what they may look at when doing so.

Every adversary exposes ``n``, ``name``, ``adaptive``, ``mode`` (None when
it works in either mode) and ``edges(obs) -> edge set`` where ``obs`` is an
:class:`~dyngossip.engine.Observables`.
"""
from __future__ import annotations

import numpy as np

from . import rng as _rng
from .engine import Kind, Observables
from .errors import ConfigurationError, TraceExhausted
from .graph import DynamicGraphTrace, GraphStream, edge, random_connected, split_side
from .lowerbound import KnowledgeState, adversary_graph, potential, sample_kprime


def oblivious_step(trace: DynamicGraphTrace, r: int, freeze: bool = False) -> frozenset:
    """E_r from a pre-committed trace; past the end, repeat E_x if ``freeze``."""
    if r > trace.horizon:
        if not freeze or trace.horizon == 0:
            raise TraceExhausted(f"round {r} beyond trace horizon {trace.horizon}")
        return trace.edges(trace.horizon)
    return trace.edges(r)


class ObliviousAdversary:
    """Replays a trace or a seeded generator stream; reads only the round index."""

    adaptive = False
    mode = None

    def __init__(self, source, freeze: bool = True, name: str | None = None):
        if not isinstance(source, (DynamicGraphTrace, GraphStream)):
            raise ConfigurationError("oblivious adversary needs a trace or a generator stream")
        self.source = source
        self.freeze = freeze
        self.n = source.n
        if name is None:
            if isinstance(source, GraphStream):
                name = f"oblivious:{source.spec.describe()}"
            else:
                name = "oblivious:" + str(source.metadata.get("generator", "trace"))
        self.name = name

    def edges(self, obs: Observables) -> frozenset:
        if isinstance(self.source, GraphStream):
            return self.source.edges(obs.round)
        return oblivious_step(self.source, obs.round, self.freeze)


def _known_matrix(held, n: int, k: int) -> np.ndarray:
    K = np.zeros((n, k), dtype=bool)
    for v, ts in enumerate(held):
        for t in ts:
            K[v, t] = True
    return K


def freeedge_step(assignment, K, Kprime) -> frozenset:
    """All free edges plus min-ID connectors between the free components."""
    free, conn, _ = adversary_graph(assignment, KnowledgeState(K, Kprime))
    return free | conn


class FreeEdgeAdversary:
    """Strongly adaptive local-broadcast adversary of the lower-bound construction.

    Sees each round's token assignment before fixing the graph.  ``history``
    keeps ``(round, components, phi_before)`` per round.
    """

    adaptive = True
    mode = "broadcast"
    name = "freeedge"

    def __init__(self, n: int, k: int, p: float = 0.25, seed: int = 0):
        if n < 1:
            raise ConfigurationError("n must be >= 1")
        self.n, self.k, self.p = n, k, p
        self.Kprime = sample_kprime(n, k, p, seed)
        self.history: list[tuple] = []

    def edges(self, obs: Observables) -> frozenset:
        state = KnowledgeState(_known_matrix(obs.held, self.n, self.k), self.Kprime)
        free, conn, ell = adversary_graph(obs.assignment or {}, state)
        self.history.append((obs.round, ell, potential(state)))
        return free | conn


def request_edges(messages) -> set:
    return {edge(m.src, m.dst) for m in messages if m.kind is Kind.REQUEST}


def _bridge(side: set, n: int, rng: np.random.Generator, avoid: set):
    """A random edge from ``side`` to the rest of the graph, avoiding ``avoid`` if possible."""
    inside = sorted(side)
    for _ in range(16):
        u = inside[int(rng.integers(len(inside)))]
        v = int(rng.integers(n))
        if v in side:
            continue
        e = edge(u, v)
        if e not in avoid:
            return e
    outside = [v for v in range(n) if v not in side]
    cands = [edge(u, v) for u in inside for v in outside]
    fresh = [e for e in cands if e not in avoid] or cands
    return fresh[int(rng.integers(len(fresh)))]


def idle_cutter_step(
    adj: list,
    births: dict,
    requested: set,
    r: int,
    sigma: int,
    rng: np.random.Generator,
) -> tuple[set, set]:
    """Cut every request-bearing edge old enough to go, then reconnect.

    An edge inserted at round b has been present for r - b rounds when
    round r starts, so it may be removed once r - b >= sigma.  Cuts are
    applied in ascending edge order; whenever one splits the graph a single
    random bridging edge heals it, which adds exactly (components - 1)
    edges overall.  ``adj`` is updated in place.  Returns (cut, added).
    """
    if sigma < 1:
        raise ConfigurationError("sigma must be >= 1")
    n = len(adj)
    cut = sorted(e for e in requested if e in births and r - births[e] >= sigma)
    avoid = set(cut)
    added = set()
    for u, v in cut:
        adj[u].discard(v)
        adj[v].discard(u)
        side = split_side(adj, u, v)
        if side is not None:
            a, b = _bridge(side, n, rng, avoid)
            adj[a].add(b)
            adj[b].add(a)
            added.add((a, b))
    return set(cut) - added, added - set(cut)


class IdleCutterAdversary:
    """Unicast stressor: removes edges that just carried a request."""

    adaptive = True
    mode = "unicast"

    def __init__(self, n: int, sigma: int = 3, seed: int = 0, density: float | None = None):
        if sigma < 1:
            raise ConfigurationError("sigma must be >= 1")
        self.n, self.sigma = n, sigma
        self.name = f"idlecut:{sigma}"
        self.density = min(1.0, 4.0 / n) if density is None and n else (density or 0.0)
        self.rng = _rng.stream(seed, _rng.ADVERSARY)
        self.adj: list[set] = [set() for _ in range(n)]
        self.births: dict = {}
        self.current: frozenset = frozenset()
        self.cuts = 0

    def edges(self, obs: Observables) -> frozenset:
        r = obs.round
        if not self.current:
            start = random_connected(self.n, self.density, self.rng)
            for u, v in start:
                self.adj[u].add(v)
                self.adj[v].add(u)
                self.births[(u, v)] = r
            self.current = frozenset(start)
            return self.current
        cut, added = idle_cutter_step(
            self.adj, self.births, request_edges(obs.last_messages), r, self.sigma, self.rng
        )
        if not cut and not added:
            return self.current
        self.cuts += len(cut)
        for e in cut:
            del self.births[e]
        for e in added:
            self.births[e] = r
        self.current = (self.current - cut) | added
        return self.current
