"""HyperLTL model checking and synthesis for one quantifier alternation.

Submodules: :mod:`hyperltl` (formulas, traces), :mod:`tsys` (transition
systems and strategies), :mod:`automata` (LTL to Büchi), :mod:`mc` (run
graphs and model checking), :mod:`synth` (bounded synthesis over SMT) and
:mod:`cli`.
"""

__version__ = "0.1.0"
