"""
Random walks to the centers
===========================

Against an oblivious adversary, many sources are first funnelled into a
few elected centers by lazy random walks, then phase 2 runs multi-source
dissemination from the centers.  At desk scale the formula parameters
are far too large (f clamps to n and phase 1 would last ~10^5 rounds), so
this demo uses f = n/4 and a phase 1 of 8n rounds.
"""

from dyngossip import GeneratorSpec, GraphStream, Kind, MultiSource, ObliviousAdversary, run
from dyngossip.protocols import ObliviousMultiSource


def churn(n, seed):
    return ObliviousAdversary(GraphStream(GeneratorSpec("random-churn", n, sigma=3, seed=seed)))


n = k = 64
placement = {t: t for t in range(k)}  # every node is a source

proto = ObliviousMultiSource(f=n // 4, ell=8 * n, s_threshold=0)
rep = run(proto, churn(n, 5), k, placement, seed=5)
notes = rep.notes
print(f"centers elected: {notes['centers']} (target f = {notes['f']})")
print(f"phase 1: {notes['walk_trials']} coin flips, {notes['walk_moves']} moves, "
      f"{rep.per_kind[Kind.WALK]} walk messages over {notes['ell']} rounds")
print(f"sources after phase 1: {notes['phase2_sources']} (was {n}); promoted stragglers: {notes['promoted_nodes']}")
print(f"completed in round {rep.completion_round}, {rep.total} messages in total")

# The same start without the funnel: every node stays a source.
direct = run(MultiSource(), churn(n, 5), k, placement, seed=5)
print()
print(f"plain multi-source: {direct.total} messages, "
      f"of which {direct.per_kind[Kind.COMPLETENESS]} completeness announcements")
print(f"with the funnel:    {rep.total} messages, "
      f"of which {rep.per_kind[Kind.COMPLETENESS]} completeness announcements")
