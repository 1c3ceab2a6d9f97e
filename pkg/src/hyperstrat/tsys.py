"""Finite input-enabled transition systems and the compositions built on them.

Trace convention (Moore): the i-th letter of a trace is the input read at
step i together with the label of the state reached by the first i inputs, so
the initial label is paired with the first input. Systems may additionally
carry *Mealy outputs* that depend on the current state and input; these only
arise when a strategy is composed in and exposes its chosen inputs.

Propositions of copy ``i`` in a self-composition are renamed ``a@i``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

from .hyperltl import LassoTrace, QfFormula

__all__ = [
    "valuations", "TransitionSystem", "IncompleteSystemError", "StrategySystem",
    "LookaheadSystem", "ProphecySpec", "epsilon_system", "self_composition",
    "product", "compose_strategy", "add_prophecy", "enumerate_lassos",
    "rename_copy", "project_copy", "input_lassos", "run_input_lasso",
]

State = Hashable
Valuation = frozenset


def valuations(props: Sequence[str]) -> list[frozenset]:
    """All subsets of ``props``, ordered by bitmask (bit i = props[i])."""
    props = list(props)
    return [frozenset(p for i, p in enumerate(props) if mask >> i & 1)
            for mask in range(1 << len(props))]


def rename_copy(valuation: Iterable[str], index: int) -> frozenset:
    return frozenset(f"{a}@{index}" for a in valuation)


def project_copy(valuation: Iterable[str], index: int) -> frozenset:
    suffix = f"@{index}"
    return frozenset(a[: -len(suffix)] for a in valuation if a.endswith(suffix))


class IncompleteSystemError(ValueError):
    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join(f"({s!r}, {sorted(v)})" for s, v in self.missing)
        super().__init__(f"transition function undefined for: {shown}")


@dataclass(frozen=True, eq=False)
class TransitionSystem:
    """A Gamma-labeled Upsilon-transition system with total deterministic tau."""

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    states: tuple[State, ...]
    initial: State
    trans: Mapping[tuple[State, frozenset], State]
    label: Mapping[State, frozenset]
    mealy: Mapping[tuple[State, frozenset], frozenset] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "states", tuple(self.states))
        if set(self.inputs) & set(self.outputs):
            raise ValueError("inputs and outputs must be disjoint")
        if self.initial not in self.states:
            raise ValueError(f"initial state {self.initial!r} not among states")
        self.check_total()

    def check_total(self):
        states = set(self.states)
        missing = [(s, v) for s in self.states for v in valuations(self.inputs)
                   if (s, v) not in self.trans]
        if missing:
            raise IncompleteSystemError(missing)
        for (s, v), t in self.trans.items():
            if t not in states:
                raise ValueError(f"transition from {s!r} leads to unknown state {t!r}")
        for s in self.states:
            if s not in self.label:
                raise ValueError(f"state {s!r} has no label")
            if not self.label[s] <= set(self.outputs):
                raise ValueError(f"label of {s!r} uses undeclared outputs")

    @property
    def props(self) -> tuple[str, ...]:
        return self.inputs + self.outputs

    def step(self, s: State, v: Iterable[str]) -> State:
        return self.trans[(s, frozenset(v) & frozenset(self.inputs))]

    def output(self, s: State, v: frozenset) -> frozenset:
        """Everything the trace letter carries besides the input itself."""
        out = self.label[s]
        if self.mealy:
            out = out | self.mealy.get((s, v), frozenset())
        return out

    def letter(self, s: State, v: frozenset) -> frozenset:
        return v | self.output(s, v)

    def run(self, inputs: Iterable[Iterable[str]]) -> list[frozenset]:
        """Trace prefix produced by a finite input word."""
        s = self.initial
        out = []
        for v in inputs:
            v = frozenset(v)
            out.append(self.letter(s, v))
            s = self.trans[(s, v)]
        return out

    def reachable(self) -> set:
        seen = {self.initial}
        todo = [self.initial]
        letters = valuations(self.inputs)
        while todo:
            s = todo.pop()
            for v in letters:
                t = self.trans[(s, v)]
                if t not in seen:
                    seen.add(t)
                    todo.append(t)
        return seen

    # -- JSON ---------------------------------------------------------------

    def to_json(self) -> dict:
        names = {s: _state_name(s) for s in self.states}
        return {
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "states": [names[s] for s in self.states],
            "initial": names[self.initial],
            "label": {names[s]: sorted(self.label[s]) for s in self.states},
            "transitions": [
                {"from": names[s], "input": sorted(v), "to": names[self.trans[(s, v)]]}
                for s in self.states for v in valuations(self.inputs)
            ],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "TransitionSystem":
        inputs = tuple(d["inputs"])
        trans = {}
        for t in d["transitions"]:
            v = frozenset(t["input"])
            if not v <= set(inputs):
                raise ValueError(f"transition input {sorted(v)} uses undeclared inputs")
            key = (t["from"], v)
            if key in trans and trans[key] != t["to"]:
                raise ValueError(f"nondeterministic transition from {t['from']!r}")
            trans[key] = t["to"]
        return cls(inputs, tuple(d["outputs"]), tuple(d["states"]), d["initial"],
                   trans, {s: frozenset(d["label"].get(s, ())) for s in d["states"]})

    @classmethod
    def load(cls, path) -> "TransitionSystem":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def dump(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2)


def _state_name(s) -> str:
    if isinstance(s, str):
        return s
    if isinstance(s, tuple):
        return "(" + ",".join(_state_name(x) for x in s) + ")"
    return str(s)


def epsilon_system() -> TransitionSystem:
    """The one-state system over no propositions; its only trace is the empty set forever."""
    return TransitionSystem((), (), ("s",), "s", {("s", frozenset()): "s"},
                            {"s": frozenset()})


@dataclass(frozen=True, eq=False)
class StrategySystem:
    """Finite-state strategy for the existential player.

    Reads valuations of ``reads`` (the universal copies' inputs, or nothing for
    exists-forall witnesses) and writes valuations of ``writes`` (the inputs of
    the existential copies). The output at a step depends on the current state
    and the letter read at that step. With lookahead ``k > 0`` the strategy is
    started in ``init[first k letters]`` and then at step i reads letter i+k,
    so its output for step i can depend on the universal inputs up to i+k.
    """

    reads: tuple[str, ...]
    writes: tuple[str, ...]
    states: tuple[State, ...]
    init: Mapping[tuple[frozenset, ...], State]
    trans: Mapping[tuple[State, frozenset], State]
    out: Mapping[tuple[State, frozenset], frozenset]
    lookahead: int = 0

    def __post_init__(self):
        object.__setattr__(self, "reads", tuple(self.reads))
        object.__setattr__(self, "writes", tuple(self.writes))
        object.__setattr__(self, "states", tuple(self.states))
        letters = valuations(self.reads)
        missing = [(x, v) for x in self.states for v in letters
                   if (x, v) not in self.trans or (x, v) not in self.out]
        if missing:
            raise IncompleteSystemError(missing)
        for key in itertools.product(letters, repeat=self.lookahead):
            if key not in self.init:
                raise ValueError(f"init undefined for buffer {[sorted(v) for v in key]}")
        for v in self.out.values():
            if not v <= set(self.writes):
                raise ValueError("strategy output uses undeclared propositions")

    @property
    def initial(self) -> State:
        if self.lookahead:
            raise ValueError("a lookahead strategy has no single initial state")
        return self.init[()]

    def outputs_for(self, inputs: Sequence[Iterable[str]]) -> list[frozenset]:
        """Existential inputs chosen for a finite universal input word.

        Only ``len(inputs) - lookahead`` choices are determined.
        """
        word = [frozenset(v) & frozenset(self.reads) for v in inputs]
        k = self.lookahead
        if len(word) < k:
            return []
        x = self.init[tuple(word[:k])]
        chosen = []
        for v in word[k:]:
            chosen.append(self.out[(x, v)])
            x = self.trans[(x, v)]
        return chosen

    @classmethod
    def moore(cls, reads, writes, states, initial, trans, label) -> "StrategySystem":
        """Strategy whose choice depends on the state only."""
        letters = valuations(reads)
        out = {(x, v): frozenset(label[x]) for x in states for v in letters}
        return cls(reads, writes, states, {(): initial}, trans, out)

    @classmethod
    def memoryless(cls, reads, writes, choose) -> "StrategySystem":
        """One-state strategy applying ``choose(letter) -> valuation`` pointwise."""
        letters = valuations(reads)
        return cls(reads, writes, (0,), {(): 0}, {(0, v): 0 for v in letters},
                   {(0, v): frozenset(choose(v)) for v in letters})

    # -- JSON ---------------------------------------------------------------
    # Files name the *base* system inputs; ``read_index``/``write_index`` give
    # the copy numbers that the letters refer to in the zipped setting.

    def to_json(self, base_inputs: Sequence[str], read_index: Sequence[int],
                write_index: Sequence[int]) -> dict:
        names = {x: _state_name(x) for x in self.states}

        def split(v, idx):
            return [sorted(project_copy(v, i) & set(base_inputs)) for i in idx]

        d = {
            "inputs": list(base_inputs),
            "arity_in": len(read_index),
            "arity_out": len(write_index),
            "lookahead": self.lookahead,
            "states": [names[x] for x in self.states],
            "transitions": [
                {"from": names[x], "input": split(v, read_index),
                 "to": names[self.trans[(x, v)]],
                 "output": split(self.out[(x, v)], write_index)}
                for x in self.states for v in valuations(self.reads)
            ],
        }
        if self.lookahead:
            d["init"] = [{"input": [split(v, read_index) for v in key], "to": names[x]}
                         for key, x in sorted(self.init.items(), key=lambda kv: repr(kv[0]))]
        else:
            d["initial"] = names[self.initial]
        return d

    @classmethod
    def from_json(cls, d: Mapping, read_index: Sequence[int] | None = None,
                  write_index: Sequence[int] | None = None) -> "StrategySystem":
        base = list(d["inputs"])
        n, m = int(d["arity_in"]), int(d["arity_out"])
        read_index = list(read_index) if read_index is not None else list(range(1, n + 1))
        write_index = list(write_index) if write_index is not None else list(range(n + 1, n + m + 1))
        if len(read_index) != n or len(write_index) != m:
            raise ValueError(f"strategy arity ({n}, {m}) does not match the formula "
                             f"({len(read_index)}, {len(write_index)})")
        reads = tuple(f"{a}@{i}" for i in read_index for a in base)
        writes = tuple(f"{a}@{i}" for i in write_index for a in base)

        def join(vals, idx):
            if len(vals) != len(idx):
                raise ValueError("valuation list has the wrong arity")
            return frozenset().union(*(rename_copy(v, i) for v, i in zip(vals, idx)))

        states = tuple(d["states"])
        trans, out = {}, {}
        label = d.get("label")
        for t in d["transitions"]:
            v = join(t["input"], read_index)
            trans[(t["from"], v)] = t["to"]
            if "output" in t:
                out[(t["from"], v)] = join(t["output"], write_index)
            elif label is not None:
                out[(t["from"], v)] = join(label[t["from"]], write_index)
        k = int(d.get("lookahead", 0))
        if k:
            init = {tuple(join(v, read_index) for v in e["input"]): e["to"] for e in d["init"]}
        else:
            init = {(): d["initial"]}
        return cls(reads, writes, states, init, trans, out, k)


# A lookahead system is a strategy whose initial state is chosen from a buffer.
LookaheadSystem = StrategySystem


@dataclass(frozen=True)
class ProphecySpec:
    prop: str
    guard: QfFormula


# ---------------------------------------------------------------------------
# Compositions
# ---------------------------------------------------------------------------

def self_composition(sys: TransitionSystem, n: int,
                     indices: Sequence[int] | None = None) -> TransitionSystem:
    """The n-fold product of ``sys`` with itself; copy ``indices[j]`` props get ``@index``."""
    if n < 1:
        raise ValueError("self-composition needs n >= 1")
    indices = list(indices) if indices is not None else list(range(1, n + 1))
    if len(indices) != n:
        raise ValueError("need one index per copy")
    inputs = tuple(f"{a}@{i}" for i in indices for a in sys.inputs)
    outputs = tuple(f"{o}@{i}" for i in indices for o in sys.outputs)
    base_letters = valuations(sys.inputs)
    states = list(itertools.product(sys.states, repeat=n))
    trans, label, mealy = {}, {}, {}
    for st in states:
        label[st] = frozenset().union(*(rename_copy(sys.label[s], i) for s, i in zip(st, indices)))
        for combo in itertools.product(base_letters, repeat=n):
            v = frozenset().union(*(rename_copy(c, i) for c, i in zip(combo, indices)))
            trans[(st, v)] = tuple(sys.trans[(s, c)] for s, c in zip(st, combo))
            if sys.mealy:
                extra = frozenset().union(*(rename_copy(sys.mealy.get((s, c), ()), i)
                                            for s, c, i in zip(st, combo, indices)))
                if extra:
                    mealy[(st, v)] = extra
    return TransitionSystem(inputs, outputs, tuple(states), (sys.initial,) * n,
                            trans, label, mealy)


def product(a: TransitionSystem, b: TransitionSystem) -> TransitionSystem:
    """Synchronous product over disjoint proposition namespaces."""
    clash = set(a.props) & set(b.props)
    if clash:
        raise ValueError(f"namespace clash: {sorted(clash)}")
    states = [(s, t) for s in a.states for t in b.states]
    trans, label, mealy = {}, {}, {}
    la, lb = valuations(a.inputs), valuations(b.inputs)
    for s, t in states:
        label[(s, t)] = a.label[s] | b.label[t]
        for va in la:
            for vb in lb:
                trans[((s, t), va | vb)] = (a.trans[(s, va)], b.trans[(t, vb)])
                extra = a.mealy.get((s, va), frozenset()) | b.mealy.get((t, vb), frozenset())
                if extra:
                    mealy[((s, t), va | vb)] = extra
    return TransitionSystem(a.inputs + b.inputs, a.outputs + b.outputs, tuple(states),
                            (a.initial, b.initial), trans, label, mealy)


def compose_strategy(sys_m: TransitionSystem, strat: StrategySystem) -> TransitionSystem:
    """``sys_m || strat``: the strategy drives the inputs of ``sys_m``.

    The composed system reads the strategy's input alphabet. The inputs chosen
    by the strategy are exposed as (Mealy) outputs so that formulas over the
    driven copies can still refer to them.
    """
    if set(strat.writes) != set(sys_m.inputs):
        raise ValueError("strategy must write exactly the inputs of the driven system")
    if set(strat.reads) & set(sys_m.props):
        raise ValueError("strategy reads propositions of the driven system")
    if strat.lookahead:
        raise ValueError("a lookahead strategy cannot be composed into a transition system")
    states = [(s, x) for s in sys_m.states for x in strat.states]
    trans, label, mealy = {}, {}, {}
    for s, x in states:
        label[(s, x)] = sys_m.label[s]
        for v in valuations(strat.reads):
            e = strat.out[(x, v)]
            trans[((s, x), v)] = (sys_m.trans[(s, e)], strat.trans[(x, v)])
            mealy[((s, x), v)] = e | sys_m.mealy.get((s, e), frozenset())
    return TransitionSystem(strat.reads, sys_m.outputs + sys_m.inputs, tuple(states),
                            (sys_m.initial, strat.initial), trans, label, mealy)


def add_prophecy(sys: TransitionSystem, p: str) -> TransitionSystem:
    """Add a fresh input ``p`` that the system ignores."""
    if p in sys.props:
        raise ValueError(f"prophecy proposition {p!r} is not fresh")
    trans, mealy = {}, {}
    for (s, v), t in sys.trans.items():
        trans[(s, v)] = t
        trans[(s, v | {p})] = t
    for (s, v), o in sys.mealy.items():
        mealy[(s, v)] = o
        mealy[(s, v | {p})] = o
    return TransitionSystem(sys.inputs + (p,), sys.outputs, sys.states, sys.initial,
                            trans, dict(sys.label), mealy)


# ---------------------------------------------------------------------------
# Lasso enumeration
# ---------------------------------------------------------------------------

def input_lassos(props: Sequence[str], stem_max: int, loop_max: int):
    letters = valuations(props)
    for ls in range(stem_max + 1):
        for stem in itertools.product(letters, repeat=ls):
            for ll in range(1, loop_max + 1):
                for loop in itertools.product(letters, repeat=ll):
                    yield stem, loop


def run_input_lasso(sys: TransitionSystem, stem, loop) -> LassoTrace:
    """The trace produced on input ``stem . loop^omega`` (as a lasso)."""
    s = sys.initial
    out = []
    for v in stem:
        out.append(sys.letter(s, v))
        s = sys.trans[(s, v)]
    starts = {}
    iterations = []
    while s not in starts:
        starts[s] = len(iterations)
        chunk = []
        for v in loop:
            chunk.append(sys.letter(s, v))
            s = sys.trans[(s, v)]
        iterations.append(chunk)
    first = starts[s]
    stem_letters = out + [x for chunk in iterations[:first] for x in chunk]
    loop_letters = [x for chunk in iterations[first:] for x in chunk]
    return LassoTrace(tuple(stem_letters), tuple(loop_letters))


def enumerate_lassos(sys: TransitionSystem, stem_max: int, loop_max: int) -> set[LassoTrace]:
    """Canonical trace lassos induced by all input lassos within the bounds."""
    if stem_max < 0 or loop_max < 1:
        raise ValueError("need stem_max >= 0 and loop_max >= 1")
    return {run_input_lasso(sys, stem, loop).canonical()
            for stem, loop in input_lassos(sys.inputs, stem_max, loop_max)}
