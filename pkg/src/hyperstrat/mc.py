"""Run graphs, acceptance annotations and the model-checking entry points."""

from __future__ import annotations

import itertools
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .automata import UniversalCoBuchi, dualize_to_ucw, ltl_to_nba
from .hyperltl import (And, Atom, Formula, Fragment, Globally, Iff, Implies,
                       LassoTrace, QfFormula, Quantifier, bounded_eval,
                       classify_prefix, negate_nnf, trace_vars, zip_formula)
from .tsys import (ProphecySpec, StrategySystem, TransitionSystem, add_prophecy,
                   enumerate_lassos, project_copy, self_composition, valuations)

__all__ = [
    "RunGraph", "Annotation", "Acceptance", "Verdict", "RunGraphSizeError",
    "FragmentError", "build_run_graph", "check_accepting", "validate_annotation",
    "formula_automaton", "mc_universal", "mc_existential", "mc_forall_exists",
    "mc_exists_forall", "mc_with_strategy", "strategy_run_graph", "apply_prophecy", "check_by_enumeration", "copy_layout",
    "STRATEGY_REFUTED",
]

DEFAULT_MAX_VERTICES = 2_000_000
STRATEGY_REFUTED = "strategy refuted (property may still hold)"


class RunGraphSizeError(RuntimeError):
    pass


class FragmentError(ValueError):
    pass


@dataclass(eq=False)
class RunGraph:
    """Explicit run graph; vertices are numbered in discovery order.

    A vertex is ``(universal state, existential state, strategy state,
    automaton state, lookahead buffer)``; absent components are ``None``/``()``.
    ``letters[(v, w)]`` is one letter realizing the edge, used to decode
    counterexamples.
    """

    vertices: list
    initial: list[int]
    succ: list[list[int]]
    rejecting: list[bool]
    letters: dict[tuple[int, int], frozenset] = field(default_factory=dict)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]],
                   rejecting: Iterable[int], initial: Sequence[int] = (0,)) -> "RunGraph":
        succ = [[] for _ in range(n)]
        for a, b in sorted(set(edges)):
            succ[a].append(b)
        rej = set(rejecting)
        return cls(list(range(n)), list(initial), succ, [v in rej for v in range(n)])

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(v, w) for v, ws in enumerate(self.succ) for w in ws]

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass
class Annotation:
    reachable: list[bool]  # lambda^B
    count: list[int]       # lambda^N


@dataclass
class Acceptance:
    accepting: bool
    annotation: Annotation | None = None
    stem: list[int] = field(default_factory=list)   # vertex path ending at the loop start
    loop: list[int] = field(default_factory=list)   # cycle through a rejecting vertex


@dataclass
class Verdict:
    status: str  # "holds" | "fails" | "unknown"
    counterexample: dict[str, LassoTrace] | None = None
    message: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status == "holds"

    def to_json(self) -> dict:
        d = {"schema": 1, "verdict": self.status, "message": self.message,
             "stats": self.stats}
        if self.counterexample is not None:
            d["counterexample"] = {v: t.to_json() for v, t in self.counterexample.items()}
        return d


# ---------------------------------------------------------------------------
# Run graph construction
# ---------------------------------------------------------------------------

def build_run_graph(aut: UniversalCoBuchi, universal: TransitionSystem | None = None,
                    existential: TransitionSystem | None = None,
                    strategy: StrategySystem | None = None,
                    max_vertices: int = DEFAULT_MAX_VERTICES) -> RunGraph:
    """Reachable part of ``universal x (existential || strategy) x aut``.

    The environment picks a valuation of the universal inputs each step; the
    strategy reads it (projected on ``strategy.reads``) and chooses the inputs
    of the existential copies. With lookahead k the universal copies consume
    the oldest buffered letter while the strategy reads the newest one.
    """
    if (existential is None) != (strategy is None):
        raise ValueError("an existential part needs a strategy and vice versa")
    if strategy is not None:
        if set(strategy.writes) != set(existential.inputs):
            raise ValueError("strategy must write exactly the existential copies' inputs")
        env_props = set(universal.inputs) if universal else set()
        if not set(strategy.reads) <= env_props:
            raise ValueError("strategy reads propositions outside the universal inputs")
    if universal is not None and existential is not None:
        clash = set(universal.props) & set(existential.props)
        if clash:
            raise ValueError(f"namespace clash between copies: {sorted(clash)}")
    known = set()
    for part in (universal, existential):
        if part is not None:
            known |= set(part.props)
    unknown = set(aut.aps) - known
    if unknown:
        raise ValueError(f"automaton reads propositions no copy provides: {sorted(unknown)}")

    env_letters = valuations(universal.inputs) if universal else [frozenset()]
    reads = frozenset(strategy.reads) if strategy else frozenset()
    k = strategy.lookahead if strategy else 0

    vertices: list = []
    index: dict = {}
    succ: list[list[int]] = []
    letters: dict = {}
    queue: deque = deque()

    def vid(v):
        i = index.get(v)
        if i is None:
            if len(vertices) >= max_vertices:
                raise RunGraphSizeError(f"run graph exceeds {max_vertices} vertices")
            i = index[v] = len(vertices)
            vertices.append(v)
            succ.append([])
            queue.append(i)
        return i

    su0 = universal.initial if universal else None
    se0 = existential.initial if existential else None
    initial = []
    for buf in itertools.product(env_letters, repeat=k):
        x0 = strategy.init[tuple(b & reads for b in buf)] if strategy else None
        initial.append(vid((su0, se0, x0, aut.initial, buf)))
    initial = sorted(set(initial))

    while queue:
        i = queue.popleft()
        su, se, x, q, buf = vertices[i]
        targets = set()
        for new in env_letters:
            now = buf[0] if k else new
            letter = frozenset()
            su2 = se2 = x2 = None
            if universal is not None:
                letter = universal.letter(su, now)
                su2 = universal.trans[(su, now)]
            if strategy is not None:
                r = new & reads
                e = strategy.out[(x, r)]
                x2 = strategy.trans[(x, r)]
                letter = letter | existential.letter(se, e)
                se2 = existential.trans[(se, e)]
            buf2 = buf[1:] + (new,) if k else ()
            for q2 in aut.delta[q][aut.letter(letter)]:
                j = vid((su2, se2, x2, q2, buf2))
                if j not in targets:
                    targets.add(j)
                    letters.setdefault((i, j), letter)
        succ[i] = sorted(targets)
    rejecting = [v[3] in aut.rejecting for v in vertices]
    return RunGraph(vertices, initial, succ, rejecting, letters)


# ---------------------------------------------------------------------------
# Acceptance
# ---------------------------------------------------------------------------

def _reachable(g: RunGraph) -> list[bool]:
    seen = [False] * len(g)
    stack = list(g.initial)
    for v in stack:
        seen[v] = True
    while stack:
        v = stack.pop()
        for w in g.succ[v]:
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    return seen


def _bfs_path(g: RunGraph, sources: Sequence[int], goal: int, allowed=None) -> list[int]:
    """Shortest path from any source to ``goal``, least vertex indices first."""
    parent = {s: None for s in sources}
    queue = deque(sources)
    while queue:
        v = queue.popleft()
        if v == goal:
            path = [v]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return path[::-1]
        for w in g.succ[v]:
            if w not in parent and (allowed is None or w in allowed):
                parent[w] = v
                queue.append(w)
    raise ValueError("goal not reachable")


def check_accepting(g: RunGraph) -> Acceptance:
    """Decide acceptance: no reachable cycle may pass through a rejecting vertex.

    On success the annotation maps every reachable vertex to the largest
    number of rejecting vertices visited strictly after it on any path, which
    satisfies ``count[v] > count[w]`` on edges into rejecting ``w`` and
    ``count[v] >= count[w]`` otherwise.
    """
    reach = _reachable(g)
    dg = nx.DiGraph()
    dg.add_nodes_from(v for v in range(len(g)) if reach[v])
    dg.add_edges_from((v, w) for v in range(len(g)) if reach[v] for w in g.succ[v])
    cond = nx.condensation(dg)
    member = cond.graph["mapping"]

    bad = []
    for c in cond.nodes:
        comp = cond.nodes[c]["members"]
        cyclic = len(comp) > 1 or any(v in g.succ[v] for v in comp)
        if cyclic:
            bad.extend(v for v in comp if g.rejecting[v])
    if bad:
        dist = {}
        queue = deque(sorted(g.initial))
        for s in queue:
            dist[s] = 0
        while queue:
            v = queue.popleft()
            for w in g.succ[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        r = min(bad, key=lambda v: (dist[v], v))
        stem = _bfs_path(g, sorted(g.initial), r)
        comp = cond.nodes[member[r]]["members"]
        loop_path = _bfs_path(g, [w for w in g.succ[r] if w in comp], r, allowed=comp)
        return Acceptance(False, stem=stem, loop=[r] + loop_path[:-1])

    count = [0] * len(g)
    for c in reversed(list(nx.topological_sort(cond))):
        best = 0
        for d in cond.successors(c):
            members = cond.nodes[d]["members"]
            rep = next(iter(members))
            rej = 1 if (len(members) == 1 and g.rejecting[rep]) else 0
            best = max(best, count[rep] + rej)
        for v in cond.nodes[c]["members"]:
            count[v] = best
    return Acceptance(True, Annotation(reach, count))


def validate_annotation(g: RunGraph, ann: Annotation) -> bool:
    """Independent edge-by-edge check of the validity conditions."""
    n = len(g.vertices)
    if len(ann.reachable) != n or len(ann.count) != n:
        return False
    for v in g.initial:
        if not ann.reachable[v]:
            return False
    for v in range(n):
        if not ann.reachable[v]:
            continue
        if not 0 <= ann.count[v] <= n:
            return False
        for w in g.succ[v]:
            if not ann.reachable[w]:
                return False
            if g.rejecting[w]:
                if not ann.count[v] > ann.count[w]:
                    return False
            elif not ann.count[v] >= ann.count[w]:
                return False
    return True


# ---------------------------------------------------------------------------
# Model checking
# ---------------------------------------------------------------------------

def formula_automaton(body: QfFormula, order: Sequence[str]) -> UniversalCoBuchi:
    """Universal co-Büchi automaton for the zipped body (dual of the NBA of its negation)."""
    return dualize_to_ucw(ltl_to_nba(negate_nnf(zip_formula(body, order))))


def copy_layout(f: Formula) -> tuple[list[int], list[int]]:
    """1-based copy indices of the universal and existential trace variables."""
    uni = [i + 1 for i, (q, _) in enumerate(f.prefix) if q is Quantifier.FORALL]
    ex = [i + 1 for i, (q, _) in enumerate(f.prefix) if q is Quantifier.EXISTS]
    return uni, ex


def _decode(g: RunGraph, acc: Acceptance, f: Formula) -> dict[str, LassoTrace]:
    path = acc.stem + acc.loop[1:] + [acc.loop[0]]
    word = [g.letters[(a, b)] for a, b in zip(path, path[1:])]
    split = len(acc.stem) - 1
    stem, loop = word[:split], word[split:]
    out = {}
    for i, var in enumerate(f.variables, start=1):
        out[var] = LassoTrace(tuple(project_copy(x, i) for x in stem),
                              tuple(project_copy(x, i) for x in loop))
    return out


def _finish(g: RunGraph, f: Formula, start: float, refuted_msg: str,
            aut: UniversalCoBuchi) -> Verdict:
    acc = check_accepting(g)
    stats = {"vertices": len(g), "rejecting": sum(g.rejecting),
             "automaton_states": aut.num_states,
             "time_ms": round((time.perf_counter() - start) * 1000, 3)}
    if acc.accepting:
        return Verdict("holds", stats=stats, message="run graph accepting")
    return Verdict("fails", _decode(g, acc, f), refuted_msg, stats)


def mc_universal(sys: TransitionSystem, f: Formula, aut: UniversalCoBuchi | None = None,
                 **kw) -> Verdict:
    """Check a universal formula via the n-fold self-composition."""
    frag = classify_prefix(f)
    if frag.kind is not Fragment.UNIVERSAL:
        raise FragmentError(f"mc_universal needs a universal formula, got {frag}")
    start = time.perf_counter()
    n = len(f.prefix)
    aut = aut or formula_automaton(f.body, f.variables)
    composed = self_composition(sys, max(n, 1))
    g = build_run_graph(aut, universal=composed, **kw)
    return _finish(g, f, start, "property refuted", aut)


def mc_existential(sys: TransitionSystem, f: Formula, **kw) -> Verdict:
    """Existential formulas by duality: exists phi holds iff forall !phi fails."""
    frag = classify_prefix(f)
    if frag.kind is not Fragment.EXISTENTIAL:
        raise FragmentError(f"mc_existential needs an existential formula, got {frag}")
    from .hyperltl import Not
    dual = Formula(tuple((Quantifier.FORALL, v) for _, v in f.prefix), Not(f.body))
    v = mc_universal(sys, dual, **kw)
    if v.holds:
        return Verdict("fails", None, "no witness traces exist", v.stats)
    return Verdict("holds", v.counterexample, "witness traces found", v.stats)


def strategy_run_graph(sys: TransitionSystem, f: Formula, strat: StrategySystem | None,
                       aut: UniversalCoBuchi | None = None, **kw) -> RunGraph:
    """Run graph ``S^n x (S^m || strat) x A`` for any prefix shape.

    The strategy must read the universal copies' inputs (or nothing) and
    write the existential copies' inputs.
    """
    uni, ex = copy_layout(f)
    universal = self_composition(sys, len(uni), uni) if uni else None
    existential = self_composition(sys, len(ex), ex) if ex else None
    if existential is not None:
        if strat is None:
            raise FragmentError("existential quantifiers need a strategy")
        writes = set(existential.inputs)
        reads = set(universal.inputs) if universal is not None else set()
        if set(strat.writes) != writes or not set(strat.reads) <= reads or \
                (strat.reads and set(strat.reads) != reads):
            raise FragmentError(
                f"strategy arity mismatch: reads {sorted(strat.reads)} / writes "
                f"{sorted(strat.writes)}, expected {sorted(reads)} (or nothing) / {sorted(writes)}")
    else:
        strat = None
    aut = aut or formula_automaton(f.body, f.variables)
    return build_run_graph(aut, universal, existential, strat, **kw)


def mc_with_strategy(sys: TransitionSystem, f: Formula, strat: StrategySystem | None,
                     aut: UniversalCoBuchi | None = None, **kw) -> Verdict:
    start = time.perf_counter()
    aut = aut or formula_automaton(f.body, f.variables)
    g = strategy_run_graph(sys, f, strat, aut, **kw)
    return _finish(g, f, start, STRATEGY_REFUTED, aut)


def mc_forall_exists(sys: TransitionSystem, f: Formula, strat: StrategySystem,
                     aut: UniversalCoBuchi | None = None, **kw) -> Verdict:
    """Check ``forall^n exists^m`` by letting ``strat`` choose the existential traces.

    ``holds`` is sound for the formula; ``fails`` only refutes the strategy.
    """
    frag = classify_prefix(f)
    if frag.kind is not Fragment.FORALL_EXISTS:
        raise FragmentError(f"mc_forall_exists needs a forall-exists formula, got {frag}")
    uni, _ = copy_layout(f)
    if set(strat.reads) != {f"{a}@{i}" for i in uni for a in sys.inputs}:
        raise FragmentError("strategy must read the inputs of every universal copy")
    return mc_with_strategy(sys, f, strat, aut, **kw)


def mc_exists_forall(sys: TransitionSystem, f: Formula, witness: StrategySystem,
                     aut: UniversalCoBuchi | None = None, **kw) -> Verdict:
    """Check ``exists^m forall^n`` with an input-free witness strategy."""
    frag = classify_prefix(f)
    if frag.kind is not Fragment.EXISTS_FORALL:
        raise FragmentError(f"mc_exists_forall needs an exists-forall formula, got {frag}")
    if witness.reads:
        raise FragmentError("an exists-forall witness must not read universal inputs")
    return mc_with_strategy(sys, f, witness, aut, **kw)


def apply_prophecy(sys: TransitionSystem, f: Formula,
                   specs: Sequence[ProphecySpec]) -> tuple[TransitionSystem, Formula]:
    """Add prophecy inputs and weaken the body to ``(AND_j G(p_j[pi1] <-> psi_j)) -> body``.

    Each guard may only mention universally quantified trace variables; the
    prophecy is read on the first universal trace.
    """
    frag = classify_prefix(f)
    if frag.kind is not Fragment.FORALL_EXISTS:
        raise FragmentError(f"prophecies apply to forall-exists formulas, got {frag}")
    if not specs:
        return sys, f
    universal = set(f.universal_vars())
    first = f.universal_vars()[0]
    taken = set(sys.props)
    assumption = None
    for spec in specs:
        bad = trace_vars(spec.guard) - universal
        if bad:
            raise FragmentError(
                f"prophecy guard for {spec.prop!r} mentions non-universal trace "
                f"variable(s) {sorted(bad)}; this would be unsound")
        if spec.prop in taken:
            raise ValueError(f"prophecy proposition {spec.prop!r} is not fresh")
        taken.add(spec.prop)
        sys = add_prophecy(sys, spec.prop)
        term = Globally(Iff(Atom(spec.prop, first), spec.guard))
        assumption = term if assumption is None else And(assumption, term)
    return sys, Formula(f.prefix, Implies(assumption, f.body))


# ---------------------------------------------------------------------------
# Enumeration oracle
# ---------------------------------------------------------------------------

def check_by_enumeration(sys: TransitionSystem, f: Formula, stem_max: int, loop_max: int,
                         witness_stem_max: int | None = None,
                         witness_loop_max: int | None = None) -> bool:
    """Evaluate ``f`` over the bounded lasso traces of ``sys``.

    Universal variables range over lassos within ``(stem_max, loop_max)``,
    existential ones over the (possibly larger) witness bounds. Exact on the
    bounded trace sets; used as an oracle for small systems.
    """
    small = sorted(enumerate_lassos(sys, stem_max, loop_max), key=repr)
    ws = witness_stem_max if witness_stem_max is not None else stem_max
    wl = witness_loop_max if witness_loop_max is not None else loop_max
    large = small if (ws, wl) == (stem_max, loop_max) else \
        sorted(enumerate_lassos(sys, ws, wl), key=repr)

    def go(i: int, assignment: dict) -> bool:
        if i == len(f.prefix):
            return bounded_eval(f.body, assignment, 0)
        q, var = f.prefix[i]
        if q is Quantifier.FORALL:
            return all(go(i + 1, {**assignment, var: t}) for t in small)
        return any(go(i + 1, {**assignment, var: t}) for t in large)

    return go(0, {})
