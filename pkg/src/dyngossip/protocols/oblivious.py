"""Two-phase random-walk dissemination against an oblivious adversary.

Phase 1 elects centers and walks every token until it reaches one: tokens
at low-degree nodes take lazy steps on the virtual n-regular multigraph
(self-loops cost nothing), high-degree nodes push tokens straight to
neighbouring centers.  Phase 2 runs multi-source dissemination with the
token owners as sources.  With few sources phase 1 is skipped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .. import rng as _rng
from ..engine import Kind, Message
from ..errors import ConfigurationError
from .base import NeighborTracker, NodeBase, Protocol
from .multi_source import LabelTable, MultiSourceNode

WALK_RULES = ("prose", "pseudocode")


@dataclass(frozen=True)
class ObliviousParams:
    f: int
    gamma: int
    ell: int
    s_threshold: float
    c_f: float = 1.0
    c_gamma: float = 1.0
    c_ell: float = 1.0


def oblivious_params(
    n: int,
    k: int,
    c_f: float = 1.0,
    c_gamma: float = 1.0,
    c_ell: float = 1.0,
    *,
    f: int | None = None,
    gamma: int | None = None,
    ell: int | None = None,
    s_threshold: float | None = None,
) -> ObliviousParams:
    """Center target f, degree threshold gamma, phase-1 length ell.

    Logs are base 2.  f is clamped to n; explicit overrides replace the
    formula for that parameter only (gamma is still derived from the final f).
    """
    if n < 2 or k < 1:
        raise ConfigurationError("oblivious parameters need n >= 2 and k >= 1")
    lg = math.log2(n)
    if f is None:
        f = math.ceil(c_f * n**0.5 * k**0.25 * lg**1.25)
    f = max(1, min(n, int(f)))
    if gamma is None:
        gamma = math.ceil(c_gamma * n * lg / f)
    if ell is None:
        ell = max(1, math.ceil(c_ell * k**0.25 * n**2.5 * lg**2.25))
    if s_threshold is None:
        s_threshold = n ** (2 / 3) * lg ** (5 / 3)
    return ObliviousParams(int(f), int(gamma), int(ell), float(s_threshold), c_f, c_gamma, c_ell)


class ObliviousNode(NodeBase):
    def __init__(self, v, n, params, center, tokens, rng, walk_rule="prose", visits=None):
        self.id = v
        self.n = n
        self.params = params
        self.center = center
        self.rng = rng
        self.walk_rule = walk_rule
        self.known = set(tokens)
        self.walkers = set() if center else set(tokens)
        self.center_owned = set(tokens) if center else set()
        self.tracker = NeighborTracker()
        self.known_centers: set[int] = set()
        self.trials: list[tuple] = []  # (round, degree, move probability, moved)
        self.inner: MultiSourceNode | None = None
        # token -> distinct nodes its walk has touched, shared by all nodes
        self.visits = visits if visits is not None else {}
        for t in tokens:
            self.visits.setdefault(t, set()).add(v)

    @property
    def owned(self) -> set:
        return self.center_owned if self.center else self.walkers

    def send(self, r, neighbors):
        if self.inner is not None:
            return self.inner.send(r, neighbors)
        fresh, gone = self.tracker.update(r, neighbors)
        self.known_centers -= gone
        if self.center:
            # once per insertion of each incident edge
            return [Message(self.id, w, Kind.CENTER, r) for w in sorted(fresh)]
        if not self.walkers:
            return []
        out = []
        nbrs = sorted(neighbors)
        d = len(nbrs)
        if d < self.params.gamma:
            used = set()
            p = d / self.n if self.walk_rule == "prose" else 1.0 / d
            for t in sorted(self.walkers):
                moved = bool(self.rng.random() < p)
                self.trials.append((r, d, p, moved))
                if not moved:
                    continue
                w = nbrs[int(self.rng.integers(d))]
                if w in used:
                    continue  # congestion: the token stays passive
                used.add(w)
                out.append(Message(self.id, w, Kind.WALK, r, t))
        else:
            centers = sorted(self.known_centers & neighbors)
            for w, t in zip(centers, sorted(self.walkers)):
                out.append(Message(self.id, w, Kind.WALK, r, t))
        for m in out:
            self.walkers.discard(m.token)
        return out

    def busy(self):
        if self.inner is not None:
            return self.inner.busy()
        # centers only speak on edge insertions; walkers draw every round
        return not self.center and bool(self.walkers)

    def deliver(self, r, inbox):
        if self.inner is not None:
            self.inner.deliver(r, inbox)
            self.known |= self.inner.known
            return
        for m in inbox:
            if m.kind is Kind.CENTER:
                self.known_centers.add(m.src)
            elif m.kind is Kind.WALK:
                self.known.add(m.token)
                self.owned.add(m.token)
                self.visits[m.token].add(self.id)


class ObliviousMultiSource(Protocol):
    name = "oblivious-multi"
    one_message_per_edge = False
    requires_oblivious = True

    def __init__(
        self,
        c_f: float = 1.0,
        c_gamma: float = 1.0,
        c_ell: float = 1.0,
        f: int | None = None,
        gamma: int | None = None,
        ell: int | None = None,
        s_threshold: float | None = None,
        walk_rule: str = "prose",
    ):
        if walk_rule not in WALK_RULES:
            raise ConfigurationError(f"walk_rule must be one of {WALK_RULES}")
        self.overrides = dict(c_f=c_f, c_gamma=c_gamma, c_ell=c_ell, f=f, gamma=gamma, ell=ell, s_threshold=s_threshold)
        self.walk_rule = walk_rule
        self.params: ObliviousParams | None = None
        self.nodes: list = []
        self._notes: dict = {}

    def setup(self, n, k, placement, seed):
        if any(len(o) != 1 for o in placement.values()):
            raise ConfigurationError("oblivious-multi needs exactly one initial owner per token")
        owned: dict[int, list] = {}
        for t, o in placement.items():
            owned.setdefault(next(iter(o)), []).append(t)
        s = len(owned)
        self._notes = {"sources": s}
        if n < 2 or k < 1:
            self.params = None
        else:
            self.params = oblivious_params(n, k, **self.overrides)
        if self.params is None or s <= self.params.s_threshold:
            self._notes["delegated"] = True
            labels = LabelTable(owned)
            self.nodes = [MultiSourceNode(v, labels) for v in range(n)]
            self.phase1_rounds = 0
            return self.nodes

        p = self.params
        self._notes.update(delegated=False, f=p.f, gamma=p.gamma, ell=p.ell)
        self.phase1_rounds = p.ell
        self.visits: dict[int, set] = {}
        self.nodes = []
        for v in range(n):
            center = bool(_rng.stream(seed, _rng.ELECTION, v).random() < p.f / n)
            node_rng = _rng.stream(seed, _rng.NODE, v)
            node = ObliviousNode(v, n, p, center, owned.get(v, ()), node_rng, self.walk_rule, self.visits)
            self.nodes.append(node)
        self._notes["centers"] = sum(nd.center for nd in self.nodes)
        return self.nodes

    def default_horizon(self, n, k):
        base = super().default_horizon(n, k)
        if n < 2 or k < 1:
            return base
        return base + oblivious_params(n, k, **self.overrides).ell

    def begin_round(self, r):
        if r != self.phase1_rounds + 1 or not self.nodes or not isinstance(self.nodes[0], ObliviousNode):
            return False
        if self.nodes[0].inner is not None:
            return False
        owned = {nd.id: sorted(nd.owned) for nd in self.nodes if nd.owned}
        promoted = [nd.id for nd in self.nodes if not nd.center and nd.walkers]
        promoted_tokens = sum(len(self.nodes[v].walkers) for v in promoted)
        k = sum(len(ts) for ts in owned.values())
        self._notes.update(
            phase_switch_round=r,
            phase2_sources=len(owned),
            promoted_nodes=len(promoted),
            promoted_tokens=promoted_tokens,
            promotion_rate=promoted_tokens / k if k else 0.0,
            ownership={t: v for v, ts in owned.items() for t in ts},
            promoted=promoted,
        )
        labels = LabelTable(owned)
        for nd in self.nodes:
            nd.inner = MultiSourceNode(nd.id, labels, tracker=nd.tracker)
        return True

    def notes(self):
        out = dict(self._notes)
        if self.nodes and isinstance(self.nodes[0], ObliviousNode):
            trials = [t for nd in self.nodes for t in nd.trials]
            out["walk_trials"] = len(trials)
            out["walk_moves"] = sum(t[3] for t in trials)
            distinct = [len(self.visits[t]) for t in sorted(self.visits)]
            out["walk_distinct_visits_mean"] = sum(distinct) / len(distinct) if distinct else 0.0
            out["walk_distinct_visits_max"] = max(distinct, default=0)
        return out
