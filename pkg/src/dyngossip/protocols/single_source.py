"""Single-source unicast dissemination.

Complete nodes announce their completeness once per neighbour and answer
requests from the previous round; incomplete nodes spread requests for
their missing tokens over edges to known-complete neighbours, preferring
new edges, then idle ones, then contributive ones.
"""
from __future__ import annotations

from ..engine import Kind, Message
from ..errors import ConfigurationError
from .base import Backlog, NeighborTracker, NodeBase, Protocol, plan_requests, request


class SingleSourceNode(NodeBase):
    def __init__(self, v: int, universe: tuple, tokens):
        self.id = v
        self.universe = universe  # token IDs in label order 1..k
        self.known = set(tokens)
        self.complete = self.known.issuperset(universe)
        self.backlog = Backlog(universe, self.known)
        self.informed: set[int] = set()  # R_v
        self.complete_nbrs: set[int] = set()
        self.anticipated: set[int] = set()
        self.tracker = NeighborTracker()
        self.contributed: set[int] = set()
        self.sent_requests: dict[int, int] = {}
        self.requests_in: dict[int, int] = {}
        # last round's request plan, kept for invariant checks
        self.plan_round = 0
        self.classes: dict = {}
        self.plan: dict = {}
        self.unassigned = 0

    def send(self, r, neighbors):
        _, gone = self.tracker.update(r, neighbors)
        self.contributed -= gone
        out = []
        if self.complete:
            for u in sorted(neighbors):
                if u not in self.informed:
                    out.append(Message(self.id, u, Kind.COMPLETENESS, r))
                    self.informed.add(u)
                elif u in self.requests_in:
                    out.append(Message(self.id, u, Kind.TOKEN, r, self.requests_in[u]))
            self.sent_requests = {}
            return out

        # requests from last round over surviving edges are answered this round
        self.anticipated = set()
        for w, t in self.sent_requests.items():
            if w in neighbors:
                self.anticipated.add(t)
                self.contributed.add(w)
        self.sent_requests = {}
        eligible = self.complete_nbrs & neighbors
        if not eligible:
            return out
        missing = self.backlog.first(len(eligible), self.anticipated)
        if not missing:
            return out
        plan, classes = plan_requests(r, missing, eligible, self.tracker, self.contributed)
        self.plan_round, self.classes, self.plan = r, classes, plan
        self.unassigned = len(self.universe) - len(self.known) - len(self.anticipated) - len(plan)
        for w, t in plan.items():
            out.append(request(self.id, w, r, t))
        self.sent_requests = plan
        return out

    def deliver(self, r, inbox):
        self.requests_in = {}
        for m in inbox:
            if m.kind is Kind.COMPLETENESS:
                self.complete_nbrs.add(m.src)
            elif m.kind is Kind.REQUEST:
                self.requests_in[m.src] = m.token
            elif m.kind is Kind.TOKEN:
                self.known.add(m.token)
        if not self.complete and len(self.known) == len(self.universe):
            self.complete = True

    def busy(self):
        nbrs = self.tracker.birth
        if self.complete:
            return bool(self.requests_in) or any(w not in self.informed for w in nbrs)
        return bool(self.sent_requests) or (
            any(w in nbrs for w in self.complete_nbrs) and not self.backlog.empty()
        )


class SingleSource(Protocol):
    name = "single-source"

    def setup(self, n, k, placement, seed):
        owners = {v for o in placement.values() for v in o}
        if k and (len(owners) != 1 or any(len(o) != 1 for o in placement.values())):
            raise ConfigurationError("single-source needs every token at one common source node")
        universe = tuple(sorted(placement))
        start = [[] for _ in range(n)]
        for t, o in placement.items():
            for v in o:
                start[v].append(t)
        self.nodes = [SingleSourceNode(v, universe, start[v]) for v in range(n)]
        return self.nodes
