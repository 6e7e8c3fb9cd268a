"""
What a token costs
==================

Flooding pays about n^2 broadcasts per token whatever the topology.  The
request-driven unicast protocols pay O(n^2 + nk) messages in total, so
their amortized cost settles at a small multiple of n as k grows, even while an adversary
keeps cutting the edges that carry requests (edge insertions, TC, are
charged to the adversary).
"""

from dyngossip import Flooding, GeneratorSpec, GraphStream, IdleCutterAdversary, ObliviousAdversary
from dyngossip import Kind, MultiSource, SingleSource, run
from dyngossip.graph import clique_edges, DynamicGraphTrace

n = 32

# Flooding on a clique: exactly n broadcasts per node per token.
clique = ObliviousAdversary(DynamicGraphTrace.static(n, clique_edges(n), 10_000))
flood = run(Flooding(), clique, k=n, placement={t: t for t in range(n)})
print(f"flooding, clique, k={n}: {flood.total} broadcasts = n^3, amortized {flood.amortized:.0f}")
print()

# Single source against random churn and against the idle-cutter.
print(f"{'adversary':>14} {'k':>5} {'total':>8} {'TC':>6} {'(total-TC)/(n^2+nk)':>20} {'amortized':>10}")
for k in (n, 4 * n, 16 * n):
    for name, adversary in (
        ("random-churn", ObliviousAdversary(GraphStream(GeneratorSpec("random-churn", n, sigma=3, seed=1)))),
        ("idle-cutter", IdleCutterAdversary(n, sigma=3, seed=1)),
    ):
        rep = run(SingleSource(), adversary, k, {t: 0 for t in range(k)}, seed=1)
        ratio = (rep.total - rep.tc) / (n * n + n * k)
        print(f"{name:>14} {k:>5} {rep.total:>8} {rep.tc:>6} {ratio:>20.3f} {rep.amortized:>10.1f}")
print()

# Many sources: completeness is now announced once per source and neighbour.
k = 4 * n
for s in (1, 4, 16):
    placement = {t: (t % s) * (n // s) for t in range(k)}
    rep = run(MultiSource(), IdleCutterAdversary(n, sigma=3, seed=2), k, placement, seed=2)
    print(f"multi-source, s={s:>2}: completeness {rep.per_kind[Kind.COMPLETENESS]:>5}  "
          f"(bound s*n*(n-1) = {s * n * (n - 1)}), rounds {rep.completion_round}")
