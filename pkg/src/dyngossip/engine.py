"""Round-synchronous execution loop and message accounting."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .errors import ConfigurationError, ModelViolation, NotApplicable, ProtocolBug
from .graph import Edge, is_connected, split_side

BROADCAST = -1


class Kind(str, enum.Enum):
    TOKEN = "token"
    REQUEST = "request"
    COMPLETENESS = "completeness"
    CENTER = "center"
    WALK = "walk"

    def __str__(self) -> str:
        return self.value


KIND_ORDER = {k: i for i, k in enumerate(Kind)}
PAYLOAD_KINDS = frozenset({Kind.TOKEN, Kind.WALK})


@dataclass(frozen=True, slots=True)
class Message:
    """One unit of accounting.

    ``token`` is the carried token for TOKEN/WALK and the requested token for
    REQUEST.  ``source`` and ``count`` are the O(log n)-bit control fields of
    a completeness announcement.
    """

    src: int
    dst: int
    kind: Kind
    round: int
    token: int | None = None
    source: int | None = None
    count: int | None = None

    def sort_key(self):
        return (self.src, self.dst, KIND_ORDER[self.kind], -1 if self.token is None else self.token)

    def log_fields(self) -> tuple:
        dst = "*" if self.dst == BROADCAST else self.dst
        tok = self.token if self.token is not None else (self.source if self.source is not None else "-")
        return (self.round, self.src, dst, self.kind.value, tok)


@dataclass(frozen=True, slots=True)
class TokenLearning:
    node: int
    token: int
    round: int


@dataclass
class Ledger:
    mode: str
    counts: dict = field(default_factory=dict)
    learning_events: list = field(default_factory=list)
    tc_running: int = 0
    deletions_running: int = 0

    def record(self, msg: Message) -> None:
        per_round = self.counts.setdefault(msg.kind, {})
        per_round[msg.round] = per_round.get(msg.round, 0) + 1

    def per_kind(self) -> dict[Kind, int]:
        return {k: sum(self.counts[k].values()) if k in self.counts else 0 for k in Kind}

    def per_round(self, kind: Kind) -> dict[int, int]:
        return dict(self.counts.get(kind, {}))

    @property
    def total(self) -> int:
        return sum(self.per_kind().values())


@dataclass
class ExecutionReport:
    protocol: str
    adversary: str
    n: int
    k: int
    s: int
    seed: int
    rounds: int
    completed: bool
    completion_round: int | None
    per_kind: dict
    tc: int
    deletions: int
    learning_count: int
    horizon: int
    notes: dict = field(default_factory=dict)
    ledger: Ledger | None = field(default=None, compare=False, repr=False)

    @property
    def total(self) -> int:
        return sum(self.per_kind.values())

    @property
    def amortized(self) -> float:
        return self.total / self.k if self.k else 0.0

    def residual(self, alpha: float) -> float:
        return competitive_residual(self, alpha)


def competitive_residual(report: ExecutionReport, alpha: float) -> float:
    """Messages left after the adversary-paid allowance ``alpha * TC``."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    value = report.total - alpha * report.tc
    return int(value) if float(value).is_integer() else value


def normalize_placement(placement: Mapping[int, object], k: int, n: int) -> dict[int, frozenset]:
    """Token -> frozenset of initial holders, validated against k and n."""
    out = {}
    for t, owners in placement.items():
        owners = frozenset([owners]) if isinstance(owners, int) else frozenset(owners)
        if not owners:
            raise ConfigurationError(f"token {t} has no initial holder")
        for v in owners:
            if not 0 <= v < n:
                raise ConfigurationError(f"token {t} placed on unknown node {v}")
        out[int(t)] = owners
    if sorted(out) != list(range(k)):
        raise ConfigurationError(f"placement must cover tokens 0..{k - 1} exactly")
    return out


def learning_count_expected(k: int, placement: Mapping[int, object], n: int) -> int:
    """Token learnings a complete run must produce: k(n-1)."""
    pl = normalize_placement(placement, k, n)
    if any(len(o) != 1 for o in pl.values()):
        raise NotApplicable("k(n-1) learnings only holds when every token has one initial owner")
    return k * (n - 1)


def source_count(placement: Mapping[int, frozenset]) -> int:
    return len({v for owners in placement.values() for v in owners})


@dataclass
class Observables:
    """What an adversary may look at when fixing E_r.

    Oblivious adversaries read only ``round``.
    """

    round: int
    held: list
    assignment: dict | None = None
    last_messages: tuple = ()
    nodes: list | None = None
    previous_edges: frozenset = frozenset()


def run(
    protocol,
    adversary,
    k: int,
    placement: Mapping[int, object],
    horizon: int | None = None,
    seed: int = 0,
    events: list | None = None,
    observer: Callable | None = None,
    eager: bool = False,
) -> ExecutionReport:
    """Execute ``protocol`` against ``adversary`` until dissemination completes.

    Protocols that stop on their own (``runs_to_quiescence``) keep running
    after completion until no node has anything left to send.  ``events``
    receives one ``(round, src, dst, kind, token)`` tuple per message.
    ``observer(round, nodes, messages, edges)`` is called after each round's
    sends, before delivery.

    Only nodes that are busy, or whose neighbourhood or inbox changed, are
    stepped; ``eager=True`` steps every node every round instead and must
    give the same result.
    """
    n = adversary.n
    pl = normalize_placement(placement, k, n)
    if protocol.requires_oblivious and getattr(adversary, "adaptive", False):
        raise ConfigurationError(f"{protocol.name} is only defined against an oblivious adversary")
    if getattr(adversary, "mode", None) not in (None, protocol.mode):
        raise ConfigurationError(f"adversary {adversary.name} needs {adversary.mode} mode, protocol is {protocol.mode}")
    if horizon is None:
        horizon = protocol.default_horizon(n, k)
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")

    nodes = protocol.setup(n, k, pl, seed)
    held = [set() for _ in range(n)]
    for t, owners in pl.items():
        for v in owners:
            held[v].add(t)
    lacking = sum(k - len(h) for h in held)
    ledger = Ledger(protocol.mode)
    broadcast = protocol.mode == "broadcast"
    strict = protocol.one_message_per_edge
    everyone = range(n)

    adj: list[set] = [set() for _ in range(n)]
    view = [frozenset()] * n
    busy = set(everyone)
    completion_round = 0 if lacking == 0 else None
    prev_edges: frozenset = frozenset()
    last_msgs: tuple = ()
    r = 0
    if completion_round is None:
        for r in range(1, horizon + 1):
            if protocol.begin_round(r):
                busy = set(everyone)
            if broadcast:
                assignment = {}
                polled = everyone if eager else sorted(busy)
                for v in polled:
                    t = nodes[v].intent(r)
                    if t is not None:
                        if t not in held[v]:
                            raise ProtocolBug(f"round {r}: node {v} broadcasts token {t} it does not hold")
                        assignment[v] = t
            else:
                assignment = None
            obs = Observables(r, held, assignment, last_msgs, nodes, prev_edges)
            cur = adversary.edges(obs)
            if not isinstance(cur, frozenset):
                cur = frozenset(cur)
            touched = set()
            if cur is not prev_edges and cur != prev_edges:
                inserted = cur - prev_edges
                removed = prev_edges - cur
                _check_edges(inserted, n, r)
                for u, v in removed:
                    adj[u].discard(v)
                    adj[v].discard(u)
                for u, v in inserted:
                    adj[u].add(v)
                    adj[v].add(u)
                _check_connected(adj, cur, removed, n, r, first=not prev_edges)
                ledger.tc_running += len(inserted)
                ledger.deletions_running += len(removed)
                for e in inserted:
                    touched.update(e)
                for e in removed:
                    touched.update(e)
                for v in touched:
                    view[v] = frozenset(adj[v])
            elif r == 1:
                _check_connected(adj, cur, (), n, r, first=True)

            if broadcast:
                msgs = [Message(v, BROADCAST, Kind.TOKEN, r, t) for v, t in sorted(assignment.items())]
                inbox: dict[int, list] = {}
                for m in msgs:
                    for w in adj[m.src]:
                        inbox.setdefault(w, []).append(m)
                stepped = polled
            else:
                stepped = everyone if eager else sorted(busy | touched)
                msgs = []
                for v in stepped:
                    msgs.extend(nodes[v].send(r, view[v]))
                msgs.sort(key=Message.sort_key)
                _check_unicast(msgs, view, held, r, strict)
                inbox = {}
                for m in msgs:
                    inbox.setdefault(m.dst, []).append(m)

            if observer is not None:
                observer(r, nodes, msgs, cur)
            for m in msgs:
                ledger.record(m)
                if events is not None:
                    events.append(m.log_fields())
            for w, box in inbox.items():
                h = held[w]
                for m in box:
                    if m.kind in PAYLOAD_KINDS and m.token not in h:
                        h.add(m.token)
                        lacking -= 1
                        ledger.learning_events.append(TokenLearning(w, m.token, r))
            if eager:
                for w in everyone:
                    nodes[w].deliver(r, inbox.get(w, ()))
                busy = set(everyone)
            else:
                for w in sorted(set(stepped) | touched | set(inbox)):
                    node = nodes[w]
                    node.deliver(r, inbox.get(w, ()))
                    if node.busy():
                        busy.add(w)
                    else:
                        busy.discard(w)

            prev_edges = cur
            last_msgs = tuple(msgs)
            if completion_round is None and lacking == 0:
                completion_round = r
            if protocol.runs_to_quiescence:
                if not any(nodes[v].pending() for v in busy):
                    break
            elif completion_round is not None:
                break

    return ExecutionReport(
        protocol=protocol.name,
        adversary=getattr(adversary, "name", type(adversary).__name__),
        n=n,
        k=k,
        s=source_count(pl),
        seed=seed,
        rounds=r,
        completed=completion_round is not None,
        completion_round=completion_round,
        per_kind=ledger.per_kind(),
        tc=ledger.tc_running,
        deletions=ledger.deletions_running,
        learning_count=len(ledger.learning_events),
        horizon=horizon,
        notes=dict(protocol.notes()),
        ledger=ledger,
    )


def _check_edges(edges: Iterable[Edge], n: int, r: int) -> None:
    for e in edges:
        u, v = e
        if not (0 <= u < v < n):
            raise ModelViolation(f"round {r}: malformed edge {e}")


def _check_connected(adj: list[set], edges: frozenset, removed: Iterable[Edge], n: int, r: int, first: bool) -> None:
    # the previous graph was connected, so it is enough that the ends of
    # every removed edge are still joined
    if first:
        ok = is_connected(edges, n)
    else:
        ok = all(split_side(adj, u, v) is None for u, v in removed)
    if not ok:
        raise ModelViolation(f"round {r}: adversary produced a disconnected graph")


def _check_unicast(msgs: list[Message], nbrs: list[frozenset], held: list[set], r: int, strict: bool) -> None:
    seen = set()
    payload = set()
    for m in msgs:
        if m.round != r:
            raise ProtocolBug(f"round {r}: message stamped with round {m.round}")
        if m.dst == BROADCAST:
            raise ProtocolBug(f"round {r}: broadcast message in unicast mode from {m.src}")
        if m.dst not in nbrs[m.src]:
            raise ProtocolBug(f"round {r}: node {m.src} sent {m.kind} to non-neighbour {m.dst}")
        key = (m.src, m.dst) if strict else (m.src, m.dst, m.kind)
        if key in seen:
            raise ProtocolBug(f"round {r}: two messages on directed edge {m.src}->{m.dst}")
        seen.add(key)
        if m.kind in PAYLOAD_KINDS:
            if (m.src, m.dst) in payload:
                raise ProtocolBug(f"round {r}: two tokens on directed edge {m.src}->{m.dst}")
            payload.add((m.src, m.dst))
            if m.token not in held[m.src]:
                raise ProtocolBug(f"round {r}: node {m.src} sent token {m.token} it does not hold")
