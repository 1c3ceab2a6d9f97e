"""Bounded synthesis of a two-client arbiter.

The plain LTL part (mutual exclusion, every request eventually granted)
needs two states. Adding a symmetry requirement, stated with a witness
trace in which the clients swap roles, pushes the smallest system to three
states together with a one-state strategy.  Needs z3 on PATH.
"""
import time

from hyperstrat import corpus
from hyperstrat.synth import SynthBounds, SynthProblem, synthesis_loop

sig = corpus.signature("mutex_signature")
for name in ("mutex_ltl", "mutex_symmetry"):
    f = corpus.formula(name)
    t0 = time.perf_counter()
    r = synthesis_loop(SynthProblem(f, None, *sig), SynthBounds(1, 1, 0, max_system=3))
    print(f"{name}: bounds (system, strategy, lookahead) = {r.bounds}"
          f"  [{time.perf_counter() - t0:.1f}s]")
    for b, status, secs in r.attempts:
        print(f"   tried {b}: {status}")
    sys = r.solution.system
    for s in sys.states:
        print(f"   state {s}: grants {sorted(sys.label[s])}")
