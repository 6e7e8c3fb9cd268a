import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyngossip.errors import GenerationError, TraceFormatError
from dyngossip.graph import (
    DynamicGraphTrace,
    GeneratorSpec,
    GraphStream,
    UnionFind,
    clique_edges,
    components,
    connect_components,
    cycle_edges,
    delta,
    edge,
    edge_deletions,
    first_sigma_violation,
    format_trace,
    generate,
    is_connected,
    is_sigma_stable,
    parse_generator_spec,
    parse_trace,
    path_edges,
    random_connected,
    read_trace,
    split_side,
    star_edges,
    topological_changes,
    write_trace,
)


def bfs_components(edges, n):
    adj = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen, out = set(), []
    for s in range(n):
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in adj[x] - seen:
                seen.add(y)
                stack.append(y)
        out.append(sorted(comp))
    return sorted(out)


@st.composite
def graphs(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    es = draw(st.sets(st.sampled_from(pairs), max_size=len(pairs))) if pairs else set()
    return n, es


@given(graphs())
def test_components_match_bfs(g):
    n, es = g
    assert sorted(components(es, n)) == bfs_components(es, n)
    assert is_connected(es, n) == (len(bfs_components(es, n)) == 1)


@given(graphs(), st.data())
def test_split_side_agrees_with_components(g, data):
    n, es = g
    if n < 2:
        return
    u, v = data.draw(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)))
    adj = [set() for _ in range(n)]
    for a, b in es:
        adj[a].add(b)
        adj[b].add(a)
    comp_of = {x: tuple(c) for c in bfs_components(es, n) for x in c}
    side = split_side(adj, u, v)
    if comp_of[u] == comp_of[v]:
        assert side is None
    else:
        assert tuple(sorted(side)) in (comp_of[u], comp_of[v])


def test_union_find_counts():
    uf = UnionFind(5)
    assert uf.union(0, 1) and uf.union(3, 4)
    assert not uf.union(1, 0)
    assert uf.count == 3
    assert uf.components() == [[0, 1], [2], [3, 4]]


def test_edge_is_normalized():
    assert edge(5, 2) == (2, 5)
    with pytest.raises(ValueError):
        edge(3, 3)


@pytest.mark.parametrize("n", [1, 2, 3, 6])
def test_shapes(n):
    assert len(clique_edges(n)) == n * (n - 1) // 2
    assert len(path_edges(n)) == max(n - 1, 0)
    assert len(star_edges(n)) == max(n - 1, 0)
    for es in (clique_edges(n), path_edges(n), star_edges(n), cycle_edges(n)):
        assert is_connected(es, n)
    if n >= 3:
        assert len(cycle_edges(n)) == n


def test_trace_rejects_bad_edges():
    with pytest.raises(ValueError):
        DynamicGraphTrace(3, (frozenset({(0, 3)}),))
    with pytest.raises(ValueError):
        DynamicGraphTrace(3, (frozenset({(2, 1)}),))


def test_round_zero_is_empty():
    t = DynamicGraphTrace.static(3, path_edges(3), 2)
    assert t.edges(0) == frozenset()
    with pytest.raises(IndexError):
        t.edges(3)


def test_tc_counts_initial_graph_and_insertions(fixtures):
    t = read_trace(fixtures / "unstable.trace")
    # 2 edges at round 1, (0,2) at round 2, (1,2) back at round 3
    assert topological_changes(t) == 4
    assert topological_changes(t, 1) == 2
    assert edge_deletions(t) == 1
    assert delta(t, 2).removed == {(1, 2)}
    assert t.disconnected_rounds() == []


def test_sigma_violation_reports_first_offender(fixtures):
    t = read_trace(fixtures / "unstable.trace")
    assert first_sigma_violation(t, 1) is None
    assert first_sigma_violation(t, 3) == ((1, 2), 1)
    assert not is_sigma_stable(t, 2)


def test_run_reaching_the_end_counts_as_stable():
    t = DynamicGraphTrace(2, (frozenset({(0, 1)}),))
    assert is_sigma_stable(t, 50)


def test_disconnected_rounds(fixtures):
    t = read_trace(fixtures / "breaks_at_7.trace")
    assert t.disconnected_rounds()[0] == 7


def test_trace_comments_and_metadata_roundtrip(tmp_path):
    t = GraphStream(GeneratorSpec("random-churn", 9, sigma=2, seed=4)).take(25)
    text = format_trace(t)
    assert text.startswith("#@ generator random-churn")
    back = parse_trace(text)
    assert back == t
    assert back.metadata["seed"] == 4
    write_trace(t, tmp_path / "x.trace")
    assert read_trace(tmp_path / "x.trace") == t


@given(st.lists(graphs(max_n=6).map(lambda g: g[1]), min_size=1, max_size=6))
def test_format_parse_roundtrip(rounds):
    n = 6
    t = DynamicGraphTrace(n, tuple(frozenset(e for e in r if e[1] < n) for r in rounds))
    assert parse_trace(format_trace(t)) == t


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("", "empty"),
        ("round 1\n", "header"),
        ("n 3\n+ 0 1\n", "before any"),
        ("n 3\nround 2\n", "contiguous"),
        ("n 3\nround 1\n+ 0 3\n", "invalid edge"),
        ("n 3\nround 1\n+ 0 1\n+ 1 0\n", "while present"),
        ("n 3\nround 1\n- 0 1\n", "while absent"),
        ("n x\n", "integer"),
        ("n 3\nround 1\nhello\n", "cannot parse"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(TraceFormatError, match=fragment):
        parse_trace(text)


@pytest.mark.parametrize("family", ["static", "random-churn", "path-rewire"])
@pytest.mark.parametrize("sigma", [1, 3])
def test_generated_traces_are_connected_and_stable(family, sigma):
    t = generate(GeneratorSpec(family, 17, sigma=sigma, seed=11), 60)
    assert t.disconnected_rounds() == []
    assert is_sigma_stable(t, sigma)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 20), st.integers(1, 4), st.integers(0, 10_000), st.integers(0, 5))
def test_churn_is_connected_and_sigma_stable(n, sigma, seed, budget):
    t = generate(GeneratorSpec("random-churn", n, sigma=sigma, churn=budget, seed=seed), 40)
    assert t.disconnected_rounds() == []
    assert is_sigma_stable(t, sigma)


def test_churn_actually_churns():
    t = generate(GeneratorSpec("random-churn", 32, sigma=3, seed=0), 100)
    assert edge_deletions(t) > 50


def test_generation_is_seeded():
    a = generate(GeneratorSpec("random-churn", 20, sigma=3, seed=5), 30)
    b = generate(GeneratorSpec("random-churn", 20, sigma=3, seed=5), 30)
    c = generate(GeneratorSpec("random-churn", 20, sigma=3, seed=6), 30)
    assert a.rounds == b.rounds
    assert a.rounds != c.rounds


def test_stream_matches_take():
    spec = GeneratorSpec("path-rewire", 10, sigma=2, seed=1)
    s = GraphStream(spec)
    t = GraphStream(spec).take(12)
    assert [s.edges(r) for r in range(1, 13)] == list(t.rounds)
    with pytest.raises(IndexError):
        s.edges(3)


def test_path_rewire_holds_for_sigma_rounds():
    t = generate(GeneratorSpec("path-rewire", 8, sigma=4, seed=2), 12)
    assert t.edges(1) == t.edges(4)
    assert all(len(t.edges(r)) == 7 for r in range(1, 13))


def test_static_shapes_from_spec():
    t = generate(GeneratorSpec("static", 5, shape="star"), 3)
    assert t.edges(3) == star_edges(5)


def test_trace_file_family(fixtures):
    spec = parse_generator_spec(f"trace-file,path={fixtures / 'golden_path.trace'}", 3)
    assert generate(spec, 1).edges(1) == path_edges(3)
    with pytest.raises(GenerationError):
        generate(spec, 2)


@pytest.mark.parametrize(
    "text",
    ["", "bogus", "random-churn,sigma", "random-churn,colour=red", "random-churn,sigma=x", "static,shape=blob"],
)
def test_bad_generator_specs(text):
    with pytest.raises(GenerationError):
        parse_generator_spec(text, 8)


def test_spec_parsing_overrides_defaults():
    spec = parse_generator_spec("random-churn,sigma=3,churn=2", 8, sigma=1, seed=9)
    assert (spec.sigma, spec.churn, spec.seed, spec.n) == (3, 2, 9, 8)
    assert spec.describe() == "random-churn,sigma=3,churn=2,density=0.5,seed=9"


@given(st.integers(1, 30), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_random_connected(n, density, seed):
    es = random_connected(n, density, np.random.default_rng(seed))
    assert is_connected(es, n)


@given(graphs(), st.integers(0, 1000))
def test_connect_components_is_minimal(g, seed):
    n, es = g
    before = len(components(es, n))
    added = connect_components(set(es), n, np.random.default_rng(seed))
    assert len(added) == before - 1
    assert is_connected(set(es) | added, n)


def test_connect_components_avoids_when_possible():
    avoid = {(0, 1)}
    for seed in range(20):
        added = connect_components(set(), 2, np.random.default_rng(seed), avoid=avoid)
        assert added == {(0, 1)}  # the only option
    for seed in range(20):
        added = connect_components({(1, 2)}, 3, np.random.default_rng(seed), avoid={(0, 1)})
        assert added == {(0, 2)}


def test_small_exhaustive_components():
    n = 4
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        es = {p for i, p in enumerate(pairs) if mask >> i & 1}
        assert sorted(components(es, n)) == bfs_components(es, n)
