"""Dynamic graph traces: representation, validation, generation and file I/O.

A trace holds the per-round edge sets E_1..E_x over nodes 0..n-1.  E_0 is
the empty graph and is never stored.  Edges are ``(u, v)`` tuples with
``u < v``.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import rng as _rng
from .errors import GenerationError, TraceFormatError

Edge = tuple[int, int]
EdgeSet = frozenset  # frozenset[Edge]

FAMILIES = ("static", "random-churn", "path-rewire", "trace-file")
SHAPES = ("random", "clique", "path", "star", "cycle")


def edge(u: int, v: int) -> Edge:
    if u == v:
        raise ValueError(f"self-loop on node {u}")
    return (u, v) if u < v else (v, u)


class UnionFind:
    """Disjoint sets over 0..n-1 with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.count = n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]
        self.count -= 1
        return True

    def components(self) -> list[list[int]]:
        """Components as sorted member lists, ordered by their minimum node."""
        groups: dict[int, list[int]] = {}
        for v in range(len(self.parent)):
            groups.setdefault(self.find(v), []).append(v)
        return sorted(groups.values(), key=lambda c: c[0])


def components(edges: Iterable[Edge], n: int) -> list[list[int]]:
    uf = UnionFind(n)
    for u, v in edges:
        uf.union(u, v)
    return uf.components()


def is_connected(edges: Iterable[Edge], n: int) -> bool:
    if n <= 1:
        return True
    uf = UnionFind(n)
    for u, v in edges:
        if uf.union(u, v) and uf.count == 1:
            return True
    return uf.count == 1


def split_side(adj: Sequence[set], u: int, v: int) -> set | None:
    """None if u and v are joined in ``adj``, else the component of one of them.

    Grows breadth-first searches from both ends in turn and stops as soon as
    they meet or one runs dry, so the cost tracks the smaller side.
    """
    if u == v:
        return None
    seen = ({u}, {v})
    frontier = ([u], [v])
    side = 0
    while frontier[0] and frontier[1]:
        mine, other = seen[side], seen[1 - side]
        nxt = []
        for x in frontier[side]:
            for y in adj[x]:
                if y in other:
                    return None
                if y not in mine:
                    mine.add(y)
                    nxt.append(y)
        frontier = (nxt, frontier[1]) if side == 0 else (frontier[0], nxt)
        side = 1 - side
    return seen[0] if not frontier[0] else seen[1]


def clique_edges(n: int) -> EdgeSet:
    return frozenset((u, v) for u in range(n) for v in range(u + 1, n))


def path_edges(n: int, order: Sequence[int] | None = None) -> EdgeSet:
    order = list(range(n)) if order is None else list(order)
    return frozenset(edge(a, b) for a, b in zip(order, order[1:]))


def star_edges(n: int, center: int = 0) -> EdgeSet:
    return frozenset(edge(center, v) for v in range(n) if v != center)


def cycle_edges(n: int) -> EdgeSet:
    if n < 3:
        return path_edges(n)
    return path_edges(n) | {edge(0, n - 1)}


@dataclass(frozen=True)
class RoundDelta:
    inserted: EdgeSet
    removed: EdgeSet


@dataclass(frozen=True)
class DynamicGraphTrace:
    """Per-round edge sets of a dynamic graph.

    Construction checks only that edges are well-formed pairs; connectivity
    is a property checked by :meth:`disconnected_rounds`, by the engine, and
    by the validator, so that broken traces can still be loaded and reported.
    """

    n: int
    rounds: tuple[EdgeSet, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        rounds = []
        for r, es in enumerate(self.rounds, start=1):
            fs = frozenset(es)
            for e in fs:
                u, v = e
                if not (0 <= u < v < self.n):
                    raise ValueError(f"round {r}: invalid edge {e} for n={self.n}")
            rounds.append(fs)
        object.__setattr__(self, "rounds", tuple(rounds))

    @classmethod
    def static(cls, n: int, edges: Iterable[Edge], horizon: int, **metadata) -> "DynamicGraphTrace":
        es = frozenset(edge(u, v) for u, v in edges)
        return cls(n, (es,) * horizon, dict(metadata))

    @property
    def horizon(self) -> int:
        return len(self.rounds)

    def __len__(self) -> int:
        return len(self.rounds)

    def edges(self, r: int) -> EdgeSet:
        """E_r, with E_0 the empty graph."""
        if r == 0:
            return frozenset()
        if not 1 <= r <= len(self.rounds):
            raise IndexError(f"round {r} outside 0..{len(self.rounds)}")
        return self.rounds[r - 1]

    def disconnected_rounds(self) -> list[int]:
        return [r for r, es in enumerate(self.rounds, start=1) if not is_connected(es, self.n)]


def delta(trace: DynamicGraphTrace, r: int) -> RoundDelta:
    if not 1 <= r <= trace.horizon:
        raise IndexError(f"round {r} outside 1..{trace.horizon}")
    cur, prev = trace.edges(r), trace.edges(r - 1)
    return RoundDelta(cur - prev, prev - cur)


def topological_changes(trace: DynamicGraphTrace, up_to: int | None = None) -> int:
    """TC: total number of edge insertions in rounds 1..up_to."""
    if up_to is None:
        up_to = trace.horizon
    if not 0 <= up_to <= trace.horizon:
        raise IndexError(f"round {up_to} outside 0..{trace.horizon}")
    return sum(len(delta(trace, r).inserted) for r in range(1, up_to + 1))


def edge_deletions(trace: DynamicGraphTrace, up_to: int | None = None) -> int:
    if up_to is None:
        up_to = trace.horizon
    return sum(len(delta(trace, r).removed) for r in range(1, up_to + 1))


def first_sigma_violation(trace: DynamicGraphTrace, sigma: int) -> tuple[Edge, int] | None:
    """Earliest (edge, round) whose presence run is shorter than ``sigma``.

    A presence run that reaches the final round counts as stable regardless
    of its length, since the trace cannot say how long it would have lasted.
    The reported round is the first round of the offending run.
    """
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    run_start: dict[Edge, int] = {}
    bad: list[tuple[int, Edge]] = []
    prev: frozenset = frozenset()
    for r in range(1, trace.horizon + 1):
        cur = trace.edges(r)
        for e in prev - cur:
            start = run_start.pop(e)
            if r - start < sigma:
                bad.append((start, e))
        for e in cur - prev:
            run_start[e] = r
        prev = cur
    if not bad:
        return None
    start, e = min(bad)
    return e, start


def is_sigma_stable(trace: DynamicGraphTrace, sigma: int) -> bool:
    return first_sigma_violation(trace, sigma) is None


# -- generation ------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSpec:
    """What kind of trace to generate.

    ``density`` is the edge probability of the initial random graph on top of
    a random spanning tree; ``churn`` caps removals (and hence insertions)
    per round for ``random-churn``.  ``shape`` selects the fixed topology of
    the ``static`` family.
    """

    family: str
    n: int
    sigma: int = 1
    churn: int | None = None
    density: float | None = None
    seed: int = 0
    shape: str = "random"
    path: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise GenerationError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.sigma < 1:
            raise GenerationError("sigma must be >= 1")
        if self.family != "trace-file" and self.n < 1:
            raise GenerationError("n must be >= 1")
        if self.churn is not None and self.churn < 0:
            raise GenerationError("churn budget must be >= 0")
        if self.density is not None and not 0.0 <= self.density <= 1.0:
            raise GenerationError("density must lie in [0, 1]")
        if self.shape not in SHAPES:
            raise GenerationError(f"unknown shape {self.shape!r}")
        if self.family == "trace-file" and not self.path:
            raise GenerationError("trace-file family needs a path")

    @property
    def effective_density(self) -> float:
        if self.density is not None:
            return self.density
        return min(1.0, 4.0 / max(self.n, 1))

    @property
    def effective_churn(self) -> int:
        if self.churn is not None:
            return self.churn
        return max(1, self.n // 16)

    def describe(self) -> str:
        parts = [self.family]
        if self.family == "trace-file":
            return f"trace-file,path={self.path}"
        if self.family == "static":
            parts.append(f"shape={self.shape}")
        parts.append(f"sigma={self.sigma}")
        if self.family == "random-churn":
            parts.append(f"churn={self.effective_churn}")
        if self.family != "path-rewire" and self.shape == "random":
            parts.append(f"density={self.effective_density:g}")
        parts.append(f"seed={self.seed}")
        return ",".join(parts)


def parse_generator_spec(text: str, n: int, sigma: int = 1, seed: int = 0) -> GeneratorSpec:
    """Parse ``family[,key=value...]``, e.g. ``random-churn,sigma=3,churn=2``.

    ``n``, ``sigma`` and ``seed`` supply defaults the text may override.
    """
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise GenerationError("empty generator spec")
    kwargs: dict = {"family": parts[0], "n": n, "sigma": sigma, "seed": seed}
    casts = {"n": int, "sigma": int, "churn": int, "density": float, "seed": int, "shape": str, "path": str}
    for p in parts[1:]:
        if "=" not in p:
            raise GenerationError(f"expected key=value in generator spec, got {p!r}")
        key, value = (s.strip() for s in p.split("=", 1))
        if key not in casts:
            raise GenerationError(f"unknown generator key {key!r}")
        try:
            kwargs[key] = casts[key](value)
        except ValueError as exc:
            raise GenerationError(f"bad value for {key}: {value!r}") from exc
    return GeneratorSpec(**kwargs)


def random_connected(n: int, density: float, rng: np.random.Generator) -> set[Edge]:
    order = rng.permutation(n)
    es = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        es.add(edge(int(order[i]), int(order[j])))
    if density > 0 and n > 1:
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(len(iu)) < density
        es.update(zip(iu[keep].tolist(), ju[keep].tolist()))
    return es


class GraphStream:
    """Lazily generated, seed-determined sequence E_1, E_2, ...

    The stream never looks at anything but its spec and seed, so it is a
    valid oblivious adversary even though rounds are produced on demand.
    Rounds must be requested in non-decreasing order.
    """

    def __init__(self, spec: GeneratorSpec):
        if spec.family == "trace-file":
            raise GenerationError("use read_trace for trace-file specs")
        self.spec = spec
        self.n = spec.n
        self._rng = _rng.stream(spec.seed, _rng.ADVERSARY)
        self._round = 0
        self._edges: frozenset = frozenset()
        self._birth: dict[Edge, int] = {}

    @property
    def round(self) -> int:
        return self._round

    def edges(self, r: int) -> EdgeSet:
        if r < self._round:
            raise IndexError(f"stream already advanced past round {r}")
        while self._round < r:
            self._advance()
        return self._edges

    def __iter__(self) -> Iterator[EdgeSet]:
        while True:
            self._advance()
            yield self._edges

    def take(self, horizon: int) -> DynamicGraphTrace:
        rounds = tuple(self.edges(r) for r in range(self._round + 1, self._round + horizon + 1))
        return DynamicGraphTrace(self.n, rounds, {"generator": self.spec.describe(), "seed": self.spec.seed})

    def _advance(self) -> None:
        r = self._round + 1
        spec, n, rng = self.spec, self.n, self._rng
        if r == 1:
            es = self._initial()
        elif spec.family == "static":
            es = set(self._edges)
        elif spec.family == "random-churn":
            es = self._churn_step(r)
        else:  # path-rewire
            if (r - 1) % spec.sigma == 0:
                es = set(path_edges(n, rng.permutation(n).tolist()))
            else:
                es = set(self._edges)
        new = frozenset(es)
        for e in new - self._edges:
            self._birth[e] = r
        for e in self._edges - new:
            del self._birth[e]
        self._edges = new
        self._round = r

    def _initial(self) -> set[Edge]:
        spec, n = self.spec, self.n
        if spec.family == "path-rewire":
            return set(path_edges(n, self._rng.permutation(n).tolist()))
        shape = spec.shape if spec.family == "static" else "random"
        if shape == "clique":
            return set(clique_edges(n))
        if shape == "path":
            return set(path_edges(n))
        if shape == "star":
            return set(star_edges(n))
        if shape == "cycle":
            return set(cycle_edges(n))
        return random_connected(n, spec.effective_density, self._rng)

    def _churn_step(self, r: int) -> set[Edge]:
        spec, n, rng = self.spec, self.n, self._rng
        budget = spec.effective_churn
        es = set(self._edges)
        removable = sorted(e for e in es if r - self._birth[e] >= spec.sigma)
        n_remove = min(int(rng.integers(0, budget + 1)), len(removable))
        removed = set()
        if n_remove:
            idx = rng.choice(len(removable), size=n_remove, replace=False)
            removed = {removable[i] for i in sorted(idx.tolist())}
            es -= removed
        repairs = connect_components(es, n, rng, avoid=removed)
        es |= repairs
        # top up so the edge count stays level; repairs already count as insertions
        extra = n_remove - len(repairs)
        max_edges = n * (n - 1) // 2
        tries = 0
        while extra > 0 and len(es) < max_edges and tries < 20 * (extra + 1):
            tries += 1
            u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
            e = edge(u, v)
            if e in es or e in removed:
                continue
            es.add(e)
            extra -= 1
        return es


def connect_components(
    es: set[Edge], n: int, rng: np.random.Generator, avoid: set[Edge] = frozenset()
) -> set[Edge]:
    """Minimal set of random bridging edges making ``es`` connected.

    Components are joined in a random order, each to the next, through random
    members.  Edges in ``avoid`` are skipped when an alternative exists.
    """
    comps = components(es, n)
    if len(comps) <= 1:
        return set()
    order = rng.permutation(len(comps)).tolist()
    added = set()
    for a, b in zip(order, order[1:]):
        ca, cb = comps[a], comps[b]
        e = None
        for _ in range(8):
            cand = edge(int(ca[rng.integers(len(ca))]), int(cb[rng.integers(len(cb))]))
            if cand not in avoid:
                e = cand
                break
        if e is None:
            e = next((edge(u, v) for u in ca for v in cb if edge(u, v) not in avoid), cand)
        added.add(e)
    return added


def generate(spec: GeneratorSpec, horizon: int) -> DynamicGraphTrace:
    if horizon < 0:
        raise GenerationError("horizon must be >= 0")
    if spec.family == "trace-file":
        trace = read_trace(spec.path)
        if horizon > trace.horizon:
            raise GenerationError(f"trace file has {trace.horizon} rounds, {horizon} requested")
        return DynamicGraphTrace(trace.n, trace.rounds[:horizon], dict(trace.metadata))
    return GraphStream(spec).take(horizon)


# -- file format ------------------------------------------------------------


def format_trace(trace: DynamicGraphTrace) -> str:
    """Serialize as ``n``/``round``/``+ u v``/``- u v`` lines.

    Metadata goes into ``#@ key value`` lines, which plain readers treat as
    comments.  Deltas are written in ascending (u, v) order.
    """
    out = io.StringIO()
    for key in sorted(trace.metadata):
        out.write(f"#@ {key} {trace.metadata[key]}\n")
    out.write(f"n {trace.n}\n")
    for r in range(1, trace.horizon + 1):
        d = delta(trace, r)
        out.write(f"round {r}\n")
        for u, v in sorted(d.inserted):
            out.write(f"+ {u} {v}\n")
        for u, v in sorted(d.removed):
            out.write(f"- {u} {v}\n")
    return out.getvalue()


def parse_trace(text: str) -> DynamicGraphTrace:
    n = None
    metadata: dict = {}
    rounds: list[frozenset] = []
    cur: set[Edge] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#@"):
            bits = line[2:].split(None, 1)
            if bits:
                metadata[bits[0]] = _meta_value(bits[1] if len(bits) > 1 else "")
            continue
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if n is None:
            if tok[0] != "n" or len(tok) != 2:
                raise TraceFormatError(f"line {lineno}: expected 'n <count>' header")
            n = _int(tok[1], lineno)
            continue
        if tok[0] == "round":
            if len(tok) != 2:
                raise TraceFormatError(f"line {lineno}: expected 'round <r>'")
            r = _int(tok[1], lineno)
            if r != len(rounds) + 1:
                raise TraceFormatError(f"line {lineno}: rounds must be contiguous from 1, got {r}")
            if cur is not None:
                rounds[-1] = frozenset(cur)
            cur = set(rounds[-1]) if rounds else set()
            rounds.append(frozenset())
            continue
        if tok[0] in "+-" and len(tok) == 3:
            if cur is None:
                raise TraceFormatError(f"line {lineno}: edge change before any 'round' line")
            u, v = _int(tok[1], lineno), _int(tok[2], lineno)
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise TraceFormatError(f"line {lineno}: invalid edge {u} {v} for n={n}")
            e = edge(u, v)
            if tok[0] == "+":
                if e in cur:
                    raise TraceFormatError(f"line {lineno}: edge {e} inserted while present")
                cur.add(e)
            else:
                if e not in cur:
                    raise TraceFormatError(f"line {lineno}: edge {e} removed while absent")
                cur.discard(e)
            continue
        raise TraceFormatError(f"line {lineno}: cannot parse {raw!r}")
    if n is None:
        raise TraceFormatError("empty trace file")
    if cur is not None:
        rounds[-1] = frozenset(cur)
    return DynamicGraphTrace(n, tuple(rounds), metadata)


def read_trace(path: str | os.PathLike) -> DynamicGraphTrace:
    with open(path) as fh:
        return parse_trace(fh.read())


def write_trace(trace: DynamicGraphTrace, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(format_trace(trace))


def _int(s: str, lineno: int) -> int:
    try:
        return int(s)
    except ValueError:
        raise TraceFormatError(f"line {lineno}: expected an integer, got {s!r}") from None


def _meta_value(s: str):
    try:
        return int(s)
    except ValueError:
        return s
