import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import churn, idle, static
from dyngossip.engine import Kind, run
from dyngossip.errors import ConfigurationError
from dyngossip.graph import clique_edges, path_edges, star_edges
from dyngossip.protocols import SingleSource
from dyngossip.protocols.base import Backlog, EdgeClass, NeighborTracker, plan_requests


class RequestAudit:
    """Checks the request discipline of every incomplete node each round."""

    def __init__(self):
        self.complete_seen = {}  # node -> set of neighbours that announced

    def __call__(self, r, nodes, msgs, cur):
        by_src = {}
        for m in msgs:
            if m.kind is Kind.COMPLETENESS:
                self.complete_seen.setdefault(m.dst, set()).add(m.src)
            if m.kind is Kind.REQUEST:
                by_src.setdefault(m.src, []).append(m)
        for v, reqs in by_src.items():
            node = nodes[v]
            tokens = [m.token for m in reqs]
            assert len(set(tokens)) == len(tokens), "duplicate token requested in one round"
            assert not set(tokens) & node.known, "requested a held token"
            assert not set(tokens) & node.anticipated, "re-requested an answered token"
            for m in reqs:
                assert m.dst in node.complete_nbrs
            classes = node.classes
            used = {m.dst for m in reqs}
            idle_edges = [w for w, c in classes.items() if w not in used]
            # an unused eligible edge means nothing was left to ask for
            if idle_edges:
                assert node.unassigned == 0
            # priority: no lower-priority edge used while a higher one sits unused
            if used and idle_edges:
                assert max(classes[w] for w in used) <= min(classes[w] for w in idle_edges)


def test_backlog_orders_and_skips():
    known = {2}
    b = Backlog(range(6), known)
    assert b.first(3) == [0, 1, 3]
    known.update({0, 1})
    assert b.first(2, skip={3}) == [4, 5]
    known.update(range(6))
    assert b.empty()


def test_backlog_compacts_stale_entries():
    known = set()
    b = Backlog(range(100), known)
    known.update(range(1, 99, 2))
    assert b.first(100) == list(range(0, 100, 2)) + [99]
    assert len(b.items) == 51


def test_plan_request_priorities():
    tr = NeighborTracker()
    tr.update(1, [1, 2, 3])
    tr.update(5, [1, 2, 3, 4])
    plan, classes = plan_requests(5, ["a", "b", "c"], [1, 2, 3, 4], tr, contributed={2})
    assert classes == {1: EdgeClass.IDLE, 2: EdgeClass.CONTRIBUTIVE, 3: EdgeClass.IDLE, 4: EdgeClass.NEW}
    assert plan == {4: "a", 1: "b", 3: "c"}


def test_new_edges_stay_new_for_two_rounds():
    tr = NeighborTracker()
    tr.update(3, [7])
    assert tr.is_new(7, 3) and tr.is_new(7, 4) and not tr.is_new(7, 5)


def test_golden_path_by_hand():
    events = []
    rep = run(SingleSource(), static(3, path_edges(3)), 1, {0: 0}, events=events)
    assert rep.completion_round == 6 and rep.total == 7
    assert [e[3] for e in events] == [
        "completeness", "request", "token", "completeness", "completeness", "request", "token",
    ]


def test_star_by_hand():
    rep = run(SingleSource(), static(4, star_edges(4)), 1, {0: 0})
    assert rep.total == 9 and rep.completion_round == 3


def test_rejects_multiple_sources():
    with pytest.raises(ConfigurationError):
        run(SingleSource(), static(3, path_edges(3)), 2, {0: 0, 1: 1})
    with pytest.raises(ConfigurationError):
        run(SingleSource(), static(3, path_edges(3)), 1, {0: [0, 1]})


def check_ledger(rep, n, k):
    tokens = rep.per_kind[Kind.TOKEN]
    assert tokens == k * (n - 1)
    assert rep.per_kind[Kind.REQUEST] <= k * (n - 1) + rep.deletions
    assert rep.per_kind[Kind.COMPLETENESS] <= n * (n - 1)
    assert rep.learning_count == k * (n - 1)


@pytest.mark.parametrize("n, k", [(2, 1), (6, 6), (12, 30), (20, 3)])
@pytest.mark.parametrize("shape", [clique_edges, path_edges, star_edges])
def test_static_graphs(n, k, shape):
    audit = RequestAudit()
    rep = run(SingleSource(), static(n, shape(n)), k, {t: n - 1 for t in range(k)}, observer=audit)
    assert rep.completed
    check_ledger(rep, n, k)
    assert rep.deletions == 0


@settings(max_examples=25)
@given(st.integers(2, 20), st.integers(1, 24), st.integers(0, 10_000), st.booleans())
def test_dynamic_runs_meet_the_ledger_bounds(n, k, seed, adaptive):
    adv = idle(n, seed) if adaptive else churn(n, seed)
    rep = run(SingleSource(), adv, k, {t: seed % n for t in range(k)}, seed=seed, observer=RequestAudit())
    assert rep.completed
    check_ledger(rep, n, k)
    assert rep.completion_round <= 8 * n * k


def test_clique_completes_fast():
    n, k = 16, 16
    rep = run(SingleSource(), static(n, clique_edges(n)), k, {t: 0 for t in range(k)})
    # source answers n-1 requests per round once everyone knows it is complete
    assert rep.completion_round <= k + 2 * n
