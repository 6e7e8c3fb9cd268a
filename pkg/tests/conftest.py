from pathlib import Path

import pytest
from hypothesis import settings

from dyngossip.adversaries import IdleCutterAdversary, ObliviousAdversary
from dyngossip.graph import DynamicGraphTrace, GeneratorSpec, GraphStream

# fixed example order keeps the suite reproducible run to run
settings.register_profile("repo", derandomize=True, deadline=None)
settings.load_profile("repo")

FIXTURES = Path(__file__).parent / "fixtures"

# criterion id -> (verdict, detail), filled by test_acceptance
ACCEPTANCE: dict = {}


@pytest.fixture
def fixtures():
    return FIXTURES


def churn(n, seed, sigma=3):
    return ObliviousAdversary(GraphStream(GeneratorSpec("random-churn", n, sigma=sigma, seed=seed)))


def static(n, edges, horizon=10_000):
    return ObliviousAdversary(DynamicGraphTrace.static(n, edges, horizon))


def idle(n, seed, sigma=3):
    return IdleCutterAdversary(n, sigma, seed=seed)


class Recorder:
    """Observer keeping each round's edge set and messages."""

    def __init__(self):
        self.rounds = []

    def __call__(self, r, nodes, msgs, cur):
        self.rounds.append((r, tuple(msgs), cur))

    def trace(self, n):
        return DynamicGraphTrace(n, tuple(cur for _, _, cur in self.rounds))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda c: (int("".join(ch for ch in c if ch.isdigit())), c)):
        verdict, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {verdict}  {detail}")

