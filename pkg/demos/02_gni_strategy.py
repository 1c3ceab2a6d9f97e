"""Generalized noninterference, checked with a strategy for the witness trace.

For a forall-exists formula the existential trace is built online by a
strategy that sees the universal traces so far. If the composed run graph
is accepting the property holds; a failure only refutes the strategy.
"""
from hyperstrat import corpus
from hyperstrat.mc import check_by_enumeration, mc_forall_exists

gni = corpus.system("gni")
f = corpus.formula("gni")
replay = corpus.strategy("gni_replay_strategy", f)
print("formula:", f)
print("strategy reads", replay.reads, "writes", replay.writes, f"({len(replay.states)} state)")

v = mc_forall_exists(gni, f, replay)
print("with the replay strategy:", v.status, v.stats)
print("brute-force witness search:", check_by_enumeration(gni, f, 1, 1))

# a strategy that ignores its input is not good enough
from hyperstrat.tsys import StrategySystem  # noqa: E402
lazy = StrategySystem.memoryless(replay.reads, replay.writes, lambda letter: frozenset())
bad = mc_forall_exists(gni, f, lazy)
print("with a constant strategy:", bad.status, "|", bad.message)
