"""Problems, model decoding, the bound-raising loop and the enumeration oracle."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from ..automata import UniversalCoBuchi
from ..hyperltl import (Formula, Fragment, Quantifier, classify_prefix, conjuncts,
                        trace_vars)
from ..mc import (Annotation, RunGraph, apply_prophecy, build_run_graph, check_accepting,
                  copy_layout, formula_automaton, mc_universal, strategy_run_graph,
                  validate_annotation)
from ..tsys import ProphecySpec, StrategySystem, TransitionSystem, valuations
from .encode import (GIVEN, ConstraintSystem, SynthBounds, _wire,
                     encode_exists_forall_synthesis, encode_forall_exists_synthesis,
                     encode_lookahead_synthesis, encode_strategy_synthesis)
from .smt import DEFAULT_TIMEOUT, emit_smtlib, parse_model, run_solver

__all__ = ["SynthProblem", "DecodedSolution", "SynthResult", "InternalError",
           "CandidateCapError", "decode_solution", "encode_problem", "synthesis_loop",
           "solve_bruteforce", "bound_triples", "verify_solution"]


class InternalError(RuntimeError):
    """A decoded model failed re-verification: an encoder bug, never a result."""


class CandidateCapError(RuntimeError):
    pass


@dataclass(eq=False)
class SynthProblem:
    """What to synthesize.

    * ``system`` given: strategy synthesis (optionally after prophecies);
    * ``system`` absent, ``formula`` given: system synthesis over the
      signature ``inputs``/``outputs``;
    * ``automaton`` given: stand-alone lookahead synthesis, ``inputs`` and
      ``outputs`` being automaton propositions.
    """

    formula: Formula | None = None
    system: TransitionSystem | None = None
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    prophecies: tuple[ProphecySpec, ...] = ()
    automaton: UniversalCoBuchi | None = None

    def __post_init__(self):
        self.inputs = tuple(self.inputs)
        self.outputs = tuple(self.outputs)
        self.prophecies = tuple(self.prophecies)
        if self.automaton is None and self.formula is None:
            raise ValueError("a synthesis problem needs a formula or an automaton")
        if self.prophecies and self.system is None:
            raise ValueError("prophecies need a given system")
        self._prepared = None

    @property
    def kind(self) -> str:
        if self.automaton is not None:
            return "lookahead"
        return "strategy" if self.system is not None else "system"

    def prepared(self):
        """(system, formula, automaton) after prophecy transformation."""
        if self._prepared is None:
            if self.kind == "lookahead":
                self._prepared = (None, None, self.automaton)
            else:
                sys, f = self.system, self.formula
                if self.prophecies:
                    sys, f = apply_prophecy(sys, f, self.prophecies)
                self._prepared = (sys, f, formula_automaton(f.body, f.variables))
        return self._prepared

    @property
    def signature(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        if self.kind == "strategy":
            sys = self.prepared()[0]
            return sys.inputs, sys.outputs
        return self.inputs, self.outputs

    @property
    def has_strategy(self) -> bool:
        if self.kind == "lookahead":
            return True
        return bool(self.formula.existential_vars())

    @property
    def reads_universal(self) -> bool:
        if self.kind == "lookahead":
            return True
        f = self.formula
        return bool(f.universal_vars()) and classify_prefix(f).kind is Fragment.FORALL_EXISTS


@dataclass(eq=False)
class DecodedSolution:
    strategy: StrategySystem | None
    system: TransitionSystem | None
    annotation: Annotation
    bounds: tuple
    graph_size: int = 0


@dataclass(eq=False)
class SynthResult:
    realizable: bool
    solution: DecodedSolution | None = None
    bounds: tuple | None = None
    message: str = ""
    attempts: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"schema": 1, "result": "realizable" if self.realizable else "exhausted",
                "bounds": list(self.bounds) if self.bounds else None,
                "message": self.message,
                "attempts": [{"bounds": list(a[0]), "status": a[1], "seconds": round(a[2], 3)}
                             for a in self.attempts]}


# ---------------------------------------------------------------------------
# Encoding and decoding
# ---------------------------------------------------------------------------

def encode_problem(problem: SynthProblem, b: SynthBounds, **kw) -> ConstraintSystem:
    sys, f, aut = problem.prepared()
    if problem.kind == "lookahead":
        return encode_lookahead_synthesis(aut, b.lookahead, b, problem.inputs,
                                          problem.outputs, **kw)
    if problem.kind == "strategy":
        return encode_strategy_synthesis(sys, f, aut, b, **kw)
    if problem.reads_universal or not f.existential_vars():
        return encode_forall_exists_synthesis(f, aut, b, problem.inputs, problem.outputs, **kw)
    return encode_exists_forall_synthesis(f, aut, b, problem.inputs, problem.outputs, **kw)


def _strategy_names(c: ConstraintSystem):
    meta = c.meta
    if meta["kind"] == "lookahead":
        return meta["inputs"], meta["outputs"]
    inputs = meta["base_u"].inputs
    reads = tuple(f"{a}@{i}" for i in meta["uni"] for a in inputs) \
        if meta["reads_universal"] else ()
    writes = tuple(f"{a}@{i}" for i in meta["ex"] for a in inputs)
    return reads, writes


def build_strategy(c: ConstraintSystem, value: Callable[[str, object], object]):
    meta = c.meta
    if meta["kind"] != "lookahead" and not meta["ex"]:
        return None
    reads, writes = _strategy_names(c)
    rv, wv = valuations(reads), valuations(writes)
    X, k = meta["x_size"], meta["k"]
    trans, out = {}, {}
    for x in range(X):
        for r, v in enumerate(rv):
            trans[(x, v)] = int(value(f"mu_{x}_{r}", 0)) if X > 1 else 0
            out[(x, v)] = frozenset(writes[w] for w in range(len(writes))
                                    if value(f"out_{x}_{r}_{w}", False))
    if k:
        n_read = meta["n_read"]
        init = {}
        for key in range(n_read ** k):
            letters = tuple(rv[key // n_read ** i % n_read] for i in range(k))
            init[letters] = int(value(f"init_{key}", 0)) if X > 1 else 0
    else:
        init = {(): 0}
    return StrategySystem(reads, writes, tuple(range(X)), init, trans, out, k)


def build_system(c: ConstraintSystem, value) -> TransitionSystem | None:
    base = c.meta["base_u"]
    if not base.symbolic:
        return None
    vals = valuations(base.inputs)
    trans = {(s, v): int(value(f"tau_{s}_{u}", 0))
             for s in range(base.size) for u, v in enumerate(vals)}
    label = {s: frozenset(o for j, o in enumerate(base.outputs) if value(f"lab_{s}_{j}", False))
             for s in range(base.size)}
    return TransitionSystem(base.inputs, base.outputs, tuple(range(base.size)), 0,
                            trans, label)


def verification_graph(problem: SynthProblem, system, strategy) -> RunGraph:
    sys, f, aut = problem.prepared()
    if problem.kind == "lookahead":
        return build_run_graph(aut, _wire(problem.inputs), _wire(problem.outputs), strategy)
    return strategy_run_graph(system or sys, f, strategy, aut)


def verify_solution(problem: SynthProblem, system, strategy):
    """Independent check of a candidate; returns the annotation or ``None``."""
    g = verification_graph(problem, system, strategy)
    acc = check_accepting(g)
    if not acc.accepting:
        return None, g
    if not validate_annotation(g, acc.annotation):
        raise InternalError("computed annotation failed validation")
    return acc.annotation, g


def decode_solution(model: str, c: ConstraintSystem,
                    problem: SynthProblem | None = None) -> DecodedSolution:
    """Read strategy (and system) off a model; unconstrained entries default to 0/false.

    When ``problem`` is given the result is re-verified by model checking and
    an :class:`InternalError` is raised if it does not hold.
    """
    values = parse_model(model)

    def value(name, default):
        return values.get(name, default)

    strategy = build_strategy(c, value)
    system = build_system(c, value)
    b = c.meta["bounds"]
    bounds = (b.system_size, b.strategy_size, c.meta["k"])
    if problem is None:
        return DecodedSolution(strategy, system, None, bounds)
    ann, g = verify_solution(problem, system, strategy)
    if ann is None:
        raise InternalError(f"decoded solution at bounds {bounds} fails re-verification")
    return DecodedSolution(strategy, system, ann, bounds, len(g))


# ---------------------------------------------------------------------------
# Bound iteration
# ---------------------------------------------------------------------------

def bound_triples(problem: SynthProblem, b: SynthBounds) -> Iterator[SynthBounds]:
    """Bounds in lexicographic (system, strategy, lookahead) order."""
    if problem.kind == "system":
        lo = b.system_size if isinstance(b.system_size, int) else 1
        systems = range(lo, max(lo, b.max_system or lo) + 1)
    else:
        systems = [GIVEN]
    if problem.has_strategy:
        strategies = range(b.strategy_size, max(b.strategy_size, b.max_strategy or 0) + 1)
    else:
        strategies = [1]
    if problem.has_strategy and problem.reads_universal:
        ks = range(b.lookahead, max(b.lookahead, b.max_lookahead or 0) + 1)
    else:
        ks = [0]
    for s in systems:
        for x in strategies:
            for k in ks:
                yield SynthBounds(s, x, k, b.max_system, b.max_strategy, b.max_lookahead,
                                  b.clause_cap)


def _exhausted_message(problem: SynthProblem) -> str:
    msg = "no solution within the explored bounds; this does not show unrealizability"
    if problem.kind == "system" and problem.formula is not None:
        frag = classify_prefix(problem.formula)
        if frag.kind is Fragment.EXISTS_FORALL:
            if len(problem.formula.universal_vars()) > 1:
                msg += ("; exists-forall synthesis with more than one universal "
                        "quantifier is only a semi-decision procedure")
            else:
                msg += ("; with a single universal quantifier a complete bound "
                        "exists but lies far beyond the explored sizes")
    return msg


def synthesis_loop(problem: SynthProblem, b: SynthBounds, solver_cmd: str | None = None,
                   timeout: float = DEFAULT_TIMEOUT, dump_smt: str | None = None,
                   log: Callable[[str], None] | None = None) -> SynthResult:
    """Solve increasing bounds until a verified solution appears or bounds run out.

    Bounds are tried one after another, so the reported bound is the least
    realizable one in iteration order.
    """
    attempts = []
    for bb in bound_triples(problem, b):
        start = time.perf_counter()
        c = encode_problem(problem, bb)
        script = emit_smtlib(c)
        if dump_smt:
            with open(dump_smt, "w", encoding="utf-8") as fh:
                fh.write(script)
        ans = run_solver(script, solver_cmd, timeout)
        elapsed = time.perf_counter() - start
        attempts.append((bb.triple, ans.status, elapsed))
        if log:
            log(f"bounds {bb.triple}: {ans.status} ({len(c.clauses)} clauses, {elapsed:.2f} s)")
        if ans.sat:
            sol = decode_solution(ans.model, c, problem)
            return SynthResult(True, sol, bb.triple, "realizable", attempts)
    return SynthResult(False, None, None, _exhausted_message(problem), attempts)


# ---------------------------------------------------------------------------
# Enumeration oracle
# ---------------------------------------------------------------------------

def _canonical(n: int, letters: int, n_roots: int, raw_cap: int):
    """Transition structures over states 0..n-1 numbered in discovery order.

    Yields ``(roots, table)`` with ``table[x * letters + l]`` the successor;
    every state is reachable from the roots, and numbering states by first
    discovery (roots in order, then breadth-first) gives the identity.
    """
    root_choices = itertools.product(range(n), repeat=n_roots) if n_roots else [()]
    raw = (n ** n_roots if n_roots else 1) * n ** (n * letters)
    if raw > raw_cap:
        raise CandidateCapError(f"{raw} raw transition structures exceed {raw_cap}")
    for roots in root_choices:
        if n_roots == 0:
            roots_eff = (0,)
        else:
            roots_eff = roots
        for table in itertools.product(range(n), repeat=n * letters):
            order = []
            seen = set()
            for r in roots_eff:
                if r not in seen:
                    seen.add(r)
                    order.append(r)
            i = 0
            while i < len(order):
                x = order[i]
                i += 1
                for l in range(letters):
                    t = table[x * letters + l]
                    if t not in seen:
                        seen.add(t)
                        order.append(t)
            if len(order) == n and order == list(range(n)):
                yield roots, table


def _systems(problem: SynthProblem, size, raw_cap: int) -> list:
    if size == GIVEN:
        return [problem.prepared()[0]]
    inputs, outputs = problem.signature
    vals = valuations(inputs)
    structs = list(_canonical(size, len(vals), 0, raw_cap))
    labels = valuations(outputs)
    out = []
    for _, table in structs:
        for lab in itertools.product(labels, repeat=size):
            trans = {(s, v): table[s * len(vals) + u]
                     for s in range(size) for u, v in enumerate(vals)}
            out.append((trans, lab))
    return [("lazy", size, inputs, outputs, t, lab) for t, lab in out]


def _make_system(entry):
    if entry is None or isinstance(entry, TransitionSystem):
        return entry
    _, size, inputs, outputs, trans, lab = entry
    return TransitionSystem(inputs, outputs, tuple(range(size)), 0, trans,
                            {s: lab[s] for s in range(size)})


def _strategy_space(reads, writes, size: int, k: int, raw_cap: int):
    rv, wv = valuations(reads), valuations(writes)
    n_keys = len(rv) ** k if k else 0
    structs = list(_canonical(size, len(rv), n_keys, raw_cap))
    n_out = len(wv) ** (size * len(rv))
    return structs, n_out


def _strategies(reads, writes, size: int, k: int, structs):
    rv, wv = valuations(reads), valuations(writes)
    keys = list(itertools.product(rv, repeat=k))
    for roots, table in structs:
        trans = {(x, v): table[x * len(rv) + r] for x in range(size) for r, v in enumerate(rv)}
        init = {key: roots[i] for i, key in enumerate(keys)} if k else {(): 0}
        for outs in itertools.product(wv, repeat=size * len(rv)):
            out = {(x, v): outs[x * len(rv) + r] for x in range(size) for r, v in enumerate(rv)}
            yield StrategySystem(reads, writes, tuple(range(size)), init, trans, out, k)


def _prefilter(problem: SynthProblem):
    """Necessary condition on systems: the purely universal top-level conjuncts."""
    if problem.kind != "system":
        return None
    f = problem.formula
    uni = f.universal_vars()
    parts = [c for c in conjuncts(f.body) if trace_vars(c) and trace_vars(c) <= set(uni)]
    if not parts or not f.existential_vars():
        return None
    body = parts[0]
    from ..hyperltl import And
    for p in parts[1:]:
        body = And(body, p)
    pre = Formula(tuple((Quantifier.FORALL, v) for v in uni), body)
    aut = formula_automaton(pre.body, pre.variables)
    return lambda sys: mc_universal(sys, pre, aut=aut).holds


def solve_bruteforce(problem: SynthProblem, b: SynthBounds, cap: int = 10 ** 6,
                     raw_cap: int = 10 ** 7,
                     log: Callable[[str], None] | None = None) -> SynthResult:
    """Enumerate every candidate of each bound (up to isomorphism) and model check it."""
    sys0, f, aut = problem.prepared()
    attempts = []
    pre = _prefilter(problem)
    for bb in bound_triples(problem, b):
        start = time.perf_counter()
        systems = _systems(problem, bb.system_size, raw_cap)
        if problem.has_strategy:
            if problem.kind == "lookahead":
                reads, writes = problem.inputs, problem.outputs
            else:
                inputs = problem.signature[0]
                uni, ex = copy_layout(f)
                reads = tuple(f"{a}@{i}" for i in uni for a in inputs) \
                    if problem.reads_universal else ()
                writes = tuple(f"{a}@{i}" for i in ex for a in inputs)
            structs, n_out = _strategy_space(reads, writes, bb.strategy_size, bb.lookahead,
                                             raw_cap)
            n_strat = len(structs) * n_out
        else:
            n_strat = 1
        total = len(systems) * n_strat
        if total > cap:
            raise CandidateCapError(f"{total} candidates at bounds {bb.triple} exceed {cap}")
        found = None
        for entry in systems:
            sys = _make_system(entry)
            if pre is not None and not pre(sys):
                continue
            cands = _strategies(reads, writes, bb.strategy_size, bb.lookahead, structs) \
                if problem.has_strategy else [None]
            for strat in cands:
                ann, g = verify_solution(problem, None if bb.system_size == GIVEN else sys,
                                         strat)
                if ann is not None:
                    found = DecodedSolution(strat, None if bb.system_size == GIVEN else sys,
                                            ann, bb.triple, len(g))
                    break
            if found:
                break
        elapsed = time.perf_counter() - start
        attempts.append((bb.triple, "found" if found else "none", elapsed))
        if log:
            log(f"bounds {bb.triple}: {total} candidates, "
                f"{'found' if found else 'none'} ({elapsed:.2f} s)")
        if found:
            return SynthResult(True, found, bb.triple, "realizable", attempts)
    return SynthResult(False, None, None, _exhausted_message(problem), attempts)
