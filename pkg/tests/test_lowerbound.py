import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyngossip.errors import ConstructionError
from dyngossip.lowerbound import (
    LAB_COLUMNS,
    SILENT,
    KnowledgeState,
    adversary_graph,
    as_assignment,
    connectors,
    deliver_broadcasts,
    fit_log_growth,
    free_graph,
    free_matrix,
    potential,
    progress_cap_run,
    random_schedule,
    sample_kprime,
    silent_schedule,
    sparse_connectivity_experiment,
    sparse_limit,
    wilson_interval,
)


# -- brute-force oracle, written from the definitions ----------------------


def bf_free(a, known):
    n = len(a)
    out = set()
    for u in range(n):
        for v in range(u + 1, n):
            u_ok = a[u] == SILENT or known[v][a[u]]
            v_ok = a[v] == SILENT or known[u][a[v]]
            if u_ok and v_ok:
                out.add((u, v))
    return out


def bf_components(n, es):
    label = list(range(n))
    changed = True
    while changed:
        changed = False
        for u, v in es:
            m = min(label[u], label[v])
            if label[u] != m or label[v] != m:
                label[u] = label[v] = m
                changed = True
    return len(set(label))


def bf_phi(K, Kp):
    return sum(bool(x or y) for rk, rp in zip(K, Kp) for x, y in zip(rk, rp))


@st.composite
def states(draw, max_n=7, max_k=3):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(0, max_k))
    bits = st.lists(st.lists(st.booleans(), min_size=k, max_size=k), min_size=n, max_size=n)
    K, Kp = np.array(draw(bits), dtype=bool).reshape(n, k), np.array(draw(bits), dtype=bool).reshape(n, k)
    a = [draw(st.sampled_from([SILENT] + [t for t in range(k) if K[v, t]])) for v in range(n)]
    return KnowledgeState(K, Kp), a


@settings(max_examples=200)
@given(states())
def test_free_graph_matches_brute_force(case):
    state, a = case
    known = (state.K | state.Kprime).tolist()
    free, ell = free_graph(a, state)
    assert set(free) == bf_free(a, known)
    assert ell == bf_components(state.n, free)


@settings(max_examples=200)
@given(states())
def test_potential_growth_is_capped(case):
    state, a = case
    free, conn, ell = adversary_graph(a, state)
    assert len(conn) == ell - 1
    K = deliver_broadcasts(a, state.K, free | conn)
    # free edges carry nothing new
    assert (deliver_broadcasts(a, state.K, free) | state.Kprime).sum() == potential(state)
    assert bf_phi(K, state.Kprime) - bf_phi(state.K, state.Kprime) <= 2 * (ell - 1)


def test_free_predicate_by_hand():
    # node 0 broadcasts token 0, node 1 broadcasts token 1, node 2 silent
    known = np.array([[1, 0], [1, 0], [0, 1]], dtype=bool)
    free = free_matrix([0, 1, SILENT], known)
    assert not free[0, 1]  # 0 lacks token 1
    assert not free[0, 2]  # 2 lacks token 0
    assert free[1, 2]  # 2 has token 1, and 2 is silent
    assert (free == free.T).all() and not free.diagonal().any()


def test_everyone_silent_is_a_clique():
    st_ = KnowledgeState(np.zeros((5, 2), bool), np.zeros((5, 2), bool))
    free, ell = free_graph([SILENT] * 5, st_)
    assert len(free) == 10 and ell == 1


def test_no_tokens():
    free = free_matrix([SILENT] * 3, np.zeros((3, 0), bool))
    assert free.sum() == 6


def test_connectors_chain_minimum_ids():
    assert connectors([[4, 6], [0, 2], [3]]) == {(0, 3), (3, 4)}
    assert connectors([[0, 1]]) == frozenset()


def test_as_assignment():
    assert as_assignment({2: 1, 0: None}, 3).tolist() == [SILENT, SILENT, 1]
    assert as_assignment([0, -1, 2], 3).tolist() == [0, SILENT, 2]


def test_kprime_is_seeded_and_has_rate_p():
    a = sample_kprime(200, 200, 0.25, 1)
    assert (a == sample_kprime(200, 200, 0.25, 1)).all()
    assert abs(a.mean() - 0.25) < 0.01
    with pytest.raises(ValueError):
        sample_kprime(2, 2, 1.5, 0)


def test_knowledge_state_shapes():
    s = KnowledgeState.from_sets([{0}, set()], [set(), {1}], 2)
    assert (s.n, s.k) == (2, 2) and potential(s) == 2
    with pytest.raises(ValueError):
        KnowledgeState(np.zeros((2, 2)), np.zeros((2, 3)))


@pytest.mark.parametrize("n, c, expected", [(1, 4, 1), (32, 4, 1), (64, 4, 2), (128, 4, 4), (256, 1, 32)])
def test_sparse_limit(n, c, expected):
    assert sparse_limit(n, c) == expected


def test_wilson_interval_contains_the_rate():
    lo, hi = wilson_interval(90, 100)
    assert lo < 0.9 < hi
    assert wilson_interval(100, 100)[1] == pytest.approx(1.0)


def test_fit_log_growth():
    assert fit_log_growth([32, 64], [10, 12]) == pytest.approx(2.0)
    assert fit_log_growth([16], [8]) == pytest.approx(2.0)


def test_experiment_rows_and_determinism():
    a = sparse_connectivity_experiment(16, 16, 0.25, 4.0, 20, seed=3)
    b = sparse_connectivity_experiment(16, 16, 0.25, 4.0, 20, seed=3)
    assert a == b and a.rows == b.rows
    assert len(a.rows) == 40 and set(a.rows[0]) == set(LAB_COLUMNS)
    assert a.beta == sparse_limit(16, 4.0)
    # floor(k/2) tokens plus K' at rate 1/4 sits near 0.625 nk
    assert a.phi0_ok_fraction == 1.0
    with pytest.raises(ValueError):
        sparse_connectivity_experiment(4, 4, 0.25, 4.0, 0, seed=0)


def test_experiment_sparse_is_connected_at_moderate_n():
    stats = sparse_connectivity_experiment(64, 64, 0.25, 4.0, 30, seed=0)
    assert stats.connected_fraction >= 0.9
    assert stats.max_components <= 3 * math.log2(64)


def test_progress_cap_run_random_schedules():
    n, k = 12, 6
    K = np.zeros((n, k), bool)
    for t in range(k):
        K[t, t] = True
    state = KnowledgeState(K, sample_kprime(n, k, 0.25, 2))
    recs = progress_cap_run(random_schedule(5), state, 40)
    assert len(recs) == 40
    assert all(r.delta <= 2 * (r.components - 1) for r in recs)
    assert recs[-1].phi_after >= recs[0].phi_before


def test_progress_cap_run_silent_rounds_change_nothing():
    state = KnowledgeState(np.eye(4, dtype=bool), np.zeros((4, 4), bool))
    recs = progress_cap_run(silent_schedule, state, 3)
    assert all(r.delta == 0 and r.components == 1 and r.sparse for r in recs)


def test_progress_cap_run_rejects_unheld_tokens():
    state = KnowledgeState(np.zeros((3, 1), bool), np.zeros((3, 1), bool))
    with pytest.raises(ValueError):
        progress_cap_run(lambda r, K: [0, SILENT, SILENT], state, 1)


def test_construction_error_is_raised_on_a_broken_cap(monkeypatch):
    import dyngossip.lowerbound as lb

    state = KnowledgeState(np.eye(3, dtype=bool), np.zeros((3, 3), bool))
    # a faulty delivery that hands everyone everything
    monkeypatch.setattr(lb, "deliver_broadcasts", lambda a, K, e: np.ones_like(K))
    with pytest.raises(ConstructionError):
        progress_cap_run(lambda r, K: [0, 1, 2], state, 1)


def test_exhaustive_small_case():
    n, k = 4, 2
    rng = np.random.default_rng(0)
    K = rng.random((n, k)) < 0.5
    Kp = rng.random((n, k)) < 0.25
    state = KnowledgeState(K, Kp)
    known = (K | Kp).tolist()
    for a in itertools.product([SILENT, 0, 1], repeat=n):
        free, ell = free_graph(list(a), state)
        assert set(free) == bf_free(a, known)
        assert ell == bf_components(n, free)
