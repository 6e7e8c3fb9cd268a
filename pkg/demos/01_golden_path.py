"""
Three nodes, one token
======================

The smallest interesting single-source run: a static path s - a - b with
the token at s.  Every message is printed, so the request/answer rhythm of
the protocol can be read off directly.
"""

from dyngossip import ObliviousAdversary, SingleSource, run
from dyngossip.graph import DynamicGraphTrace, path_edges

# A static path, replayed by an oblivious adversary.
trace = DynamicGraphTrace.static(3, path_edges(3), horizon=20)
events = []
report = run(SingleSource(), ObliviousAdversary(trace), k=1, placement={0: 0}, events=events)

# Round 1: s announces it is complete.  Round 2: a asks for the token.
# Round 3: s answers.  Round 4: a is complete and tells both neighbours.
# Rounds 5-6: b repeats the dance with a.
for r, src, dst, kind, token in events:
    print(f"round {r}: {src} -> {dst}  {kind} {token}")

print()
print(f"messages: {report.total}, completed in round {report.completion_round}")
print(f"per kind: { {str(k): v for k, v in report.per_kind.items() if v} }")
