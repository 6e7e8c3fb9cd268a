"""Multi-source unicast dissemination.

Tokens are labelled ``(x, i)``: the i-th token of source x.  Each node runs
three tasks per round: announce completeness (lowest source first) to
neighbours not yet told, answer last round's requests, and request tokens
of the lowest source it is not complete for but has heard about, using the
single-source request discipline.
"""
from __future__ import annotations

from typing import Mapping

from ..engine import Kind, Message
from ..errors import ConfigurationError
from .base import Backlog, NeighborTracker, NodeBase, Protocol, plan_requests, request


class LabelTable:
    """Bijection between ``(source, index)`` labels and engine token IDs.

    A source numbers its own tokens in ascending ID order.  Nodes use the
    table only to name tokens on the wire, never to infer what they hold.
    """

    def __init__(self, owned: Mapping[int, list]):
        self.by_source = {x: tuple(sorted(ts)) for x, ts in owned.items() if ts}
        self._label = {t: (x, i) for x, ts in self.by_source.items() for i, t in enumerate(ts)}

    def gid(self, label: tuple) -> int:
        x, i = label
        return self.by_source[x][i]

    def label(self, gid: int) -> tuple:
        return self._label[gid]

    @property
    def sources(self) -> list[int]:
        return sorted(self.by_source)


class MultiSourceNode(NodeBase):
    def __init__(self, v: int, labels: LabelTable, tracker: NeighborTracker | None = None):
        self.id = v
        self.labels = labels
        own = labels.by_source.get(v, ())
        self.known = set(own)
        self.counts: dict[int, int] = {}
        self.have: dict[int, set] = {}
        self.complete_for: set[int] = set()  # I_v
        self.informed: dict[int, set] = {}  # R_v(x)
        self.heard: dict[int, set] = {}  # S_v(x)
        self.backlogs: dict[int, Backlog] = {}
        if own:
            self.counts[v] = len(own)
            self.have[v] = set(range(len(own)))
            self.complete_for.add(v)
        self.tracker = tracker if tracker is not None else NeighborTracker()
        self.contributed: set[tuple] = set()  # (neighbour, source)
        self.sent_requests: dict[int, tuple] = {}
        self.requests_in: dict[int, tuple] = {}
        self.plan_round = 0
        self.active_source = None
        self.classes: dict = {}
        self.plan: dict = {}
        self.unassigned = 0

    def send(self, r, neighbors):
        _, gone = self.tracker.update(r, neighbors)
        if gone:
            self.contributed = {(w, x) for w, x in self.contributed if w not in gone}
        out = []
        gid = self.labels.gid

        sources = sorted(self.complete_for)
        for w in sorted(neighbors):
            for x in sources:
                told = self.informed.setdefault(x, set())
                if w not in told:
                    told.add(w)
                    out.append(Message(self.id, w, Kind.COMPLETENESS, r, source=x, count=self.counts[x]))
                    break

        for w, label in sorted(self.requests_in.items()):
            if w in neighbors:
                out.append(Message(self.id, w, Kind.TOKEN, r, gid(label)))

        anticipated = set()
        for w, label in self.sent_requests.items():
            if w in neighbors:
                anticipated.add(label)
                self.contributed.add((w, label[0]))
        self.sent_requests = {}
        pending = [x for x in sorted(self.heard) if x not in self.complete_for]
        if not pending:
            self.active_source = None
            return out
        x = pending[0]
        self.active_source = x
        eligible = self.heard[x] & neighbors
        if not eligible:
            return out
        skip = {i for y, i in anticipated if y == x}
        missing = [(x, i) for i in self.backlog(x).first(len(eligible), skip)]
        if not missing:
            return out
        contributed = {w for w, y in self.contributed if y == x}
        plan, classes = plan_requests(r, missing, eligible, self.tracker, contributed)
        self.plan_round, self.classes, self.plan = r, classes, plan
        self.unassigned = self.counts[x] - len(self.have.get(x, ())) - len(skip) - len(plan)
        for w, label in plan.items():
            out.append(request(self.id, w, r, gid(label)))
        self.sent_requests = plan
        return out

    def backlog(self, x: int) -> Backlog:
        if x not in self.backlogs:
            self.backlogs[x] = Backlog(range(self.counts[x]), self.have.setdefault(x, set()))
        return self.backlogs[x]

    def busy(self):
        if self.requests_in or self.sent_requests:
            return True
        nbrs = self.tracker.birth
        for x in self.complete_for:
            told = self.informed.get(x, ())
            if any(w not in told for w in nbrs):
                return True
        pending = [x for x in self.heard if x not in self.complete_for]
        if not pending:
            return False
        x = min(pending)
        return any(w in nbrs for w in self.heard[x]) and not self.backlog(x).empty()

    def deliver(self, r, inbox):
        self.requests_in = {}
        for m in inbox:
            if m.kind is Kind.COMPLETENESS:
                self.heard.setdefault(m.source, set()).add(m.src)
                self.counts.setdefault(m.source, m.count)
            elif m.kind is Kind.REQUEST:
                self.requests_in[m.src] = self.labels.label(m.token)
            elif m.kind is Kind.TOKEN:
                self.known.add(m.token)
                x, i = self.labels.label(m.token)
                self.have.setdefault(x, set()).add(i)
                if len(self.have[x]) == self.counts[x]:
                    self.complete_for.add(x)


class MultiSource(Protocol):
    name = "multi-source"
    # announcement, answer and request run as parallel tasks, so one
    # directed edge may carry one message of each kind per round
    one_message_per_edge = False

    def setup(self, n, k, placement, seed):
        if any(len(o) != 1 for o in placement.values()):
            raise ConfigurationError("multi-source needs exactly one initial owner per token")
        owned: dict[int, list] = {}
        for t, o in placement.items():
            owned.setdefault(next(iter(o)), []).append(t)
        self.labels = LabelTable(owned)
        self.nodes = [MultiSourceNode(v, self.labels) for v in range(n)]
        return self.nodes
