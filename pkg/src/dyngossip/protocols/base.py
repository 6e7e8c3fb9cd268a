"""Pieces shared by the protocol state machines."""
from __future__ import annotations

import enum
from typing import Iterable, Mapping, Sequence

from ..engine import Kind, Message


class EdgeClass(enum.IntEnum):
    # value = request priority (lower goes first)
    NEW = 0
    IDLE = 1
    CONTRIBUTIVE = 2


class Protocol:
    """A protocol builds one state machine per node and tells the engine
    how to drive them."""

    name = "protocol"
    mode = "unicast"
    one_message_per_edge = True
    runs_to_quiescence = False
    requires_oblivious = False

    def setup(self, n: int, k: int, placement: Mapping[int, frozenset], seed: int) -> list:
        raise NotImplementedError

    def default_horizon(self, n: int, k: int) -> int:
        return max(1, 8 * n * k)

    def begin_round(self, r: int) -> bool:
        """Hook before round r; return True if every node must be stepped."""
        return False

    def notes(self) -> dict:
        return {}


class NodeBase:
    def send(self, r: int, neighbors: frozenset) -> list[Message]:
        return []

    def intent(self, r: int) -> int | None:
        return None

    def deliver(self, r: int, inbox: Sequence[Message]) -> None:
        pass

    def pending(self) -> bool:
        return False

    def busy(self) -> bool:
        """Whether the node may act next round with an unchanged
        neighbourhood and an empty inbox.  True is always safe."""
        return True


class NeighborTracker:
    """Remembers when each currently present incident edge was inserted."""

    def __init__(self):
        self.birth: dict[int, int] = {}

    def update(self, r: int, neighbors: Iterable[int]) -> tuple[set, set]:
        nbrs = set(neighbors)
        gone = set(self.birth) - nbrs
        for w in gone:
            del self.birth[w]
        fresh = nbrs - set(self.birth)
        for w in fresh:
            self.birth[w] = r
        return fresh, gone

    def is_new(self, w: int, r: int) -> bool:
        # inserted at the beginning of round r or r-1
        return self.birth[w] >= r - 1


class Backlog:
    """Items still wanted, in ascending order.

    ``known`` is the owner's live set of held items; held items are skipped
    on reads and swept out once enough have piled up.
    """

    def __init__(self, items, known: set):
        self.items = sorted(x for x in items if x not in known)
        self.known = known
        self.head = 0

    def first(self, m: int, skip=()) -> list:
        """Up to m wanted items not in ``skip``, ascending."""
        items, known = self.items, self.known
        while self.head < len(items) and items[self.head] in known:
            self.head += 1
        out = []
        stale = 0
        for i in range(self.head, len(items)):
            if len(out) >= m:
                break
            x = items[i]
            if x in known:
                stale += 1
            elif x not in skip:
                out.append(x)
        if stale > 32:
            self.items = [x for x in items[self.head:] if x not in known]
            self.head = 0
        return out

    def empty(self) -> bool:
        return not self.first(1)


def plan_requests(
    r: int,
    missing: Sequence,
    complete_nbrs: Iterable[int],
    tracker: NeighborTracker,
    contributed: set,
) -> tuple[dict[int, object], dict[int, EdgeClass]]:
    """Assign distinct missing tokens to edges towards complete neighbours.

    Edges are taken NEW first, then IDLE, then CONTRIBUTIVE, ascending
    neighbour ID within a class; each edge carries at most one request.
    ``contributed`` holds neighbours whose current edge incarnation already
    carried a token.  Returns (neighbour -> requested item, neighbour -> class).
    """
    classes = {}
    for w in complete_nbrs:
        if tracker.is_new(w, r):
            classes[w] = EdgeClass.NEW
        elif w in contributed:
            classes[w] = EdgeClass.CONTRIBUTIVE
        else:
            classes[w] = EdgeClass.IDLE
    order = sorted(classes, key=lambda w: (classes[w], w))
    return dict(zip(order, missing)), classes


def request(src: int, dst: int, r: int, token: int) -> Message:
    return Message(src, dst, Kind.REQUEST, r, token)
