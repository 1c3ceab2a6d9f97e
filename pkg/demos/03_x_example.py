"""The X-example: a witness that must predict the future.

forall p. exists q. X a[p] <-> a[q] holds on a system with a free input a,
yet no strategy that only sees the past can produce q. Two remedies:
reading one letter ahead, or adding a prophecy input that announces X a.
"""
from hyperstrat import corpus
from hyperstrat.mc import apply_prophecy, check_by_enumeration, mc_forall_exists
from hyperstrat.synth import GIVEN, SynthBounds, SynthProblem, synthesis_loop

free = corpus.system("free_a")
f = corpus.formula("x_example")
print("formula:", f)
print("true on the bounded trace set:", check_by_enumeration(free, f, 2, 2))

problem = SynthProblem(f, free)
r0 = synthesis_loop(problem, SynthBounds(GIVEN, 1, 0, max_strategy=2))
print("\nno lookahead, up to 2 states:", r0.message or r0.bounds)

r1 = synthesis_loop(problem, SynthBounds(GIVEN, 1, 0, max_strategy=2, max_lookahead=1))
print("lookahead 1:", r1.bounds, "->", mc_forall_exists(free, f, r1.solution.strategy).status)

pro = corpus.prophecies("x_prophecy")
s2, f2 = apply_prophecy(free, f, pro)
print("\nwith prophecy pp = X a[p]:", f2)
st = corpus.strategy("x_prophecy_strategy", f2)
print("strategy a[q] := pp[p]:", mc_forall_exists(s2, f2, st).status)

try:
    apply_prophecy(free, f, corpus.prophecies("x_prophecy_unsound"))
except ValueError as e:
    print("guard over the witness trace:", e)
