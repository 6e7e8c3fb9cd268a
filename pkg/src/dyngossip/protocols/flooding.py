"""Flooding baseline for local broadcast: every node broadcasts every token
it knows ``n`` times, round-robin over its tokens."""
from __future__ import annotations

from collections import deque

from .base import NodeBase, Protocol


class FloodingNode(NodeBase):
    def __init__(self, v: int, n: int, tokens):
        self.id = v
        self.n = n
        self.known = set(tokens)
        self.queue = deque([t, n] for t in sorted(self.known))

    def intent(self, r):
        if not self.queue:
            return None
        entry = self.queue.popleft()
        entry[1] -= 1
        if entry[1] > 0:
            self.queue.append(entry)
        return entry[0]

    def deliver(self, r, inbox):
        fresh = sorted({m.token for m in inbox} - self.known)
        for t in fresh:
            self.known.add(t)
            self.queue.append([t, self.n])

    def pending(self):
        return bool(self.queue)

    busy = pending


class Flooding(Protocol):
    name = "flooding"
    mode = "broadcast"
    runs_to_quiescence = True

    def setup(self, n, k, placement, seed):
        start = [[] for _ in range(n)]
        for t, owners in placement.items():
            for v in owners:
                start[v].append(t)
        self.nodes = [FloodingNode(v, n, start[v]) for v in range(n)]
        return self.nodes
