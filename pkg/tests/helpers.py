"""Shared generators and independent oracles for the test suite."""

import itertools
import math
import random

from hyperstrat.hyperltl import (FALSE, TRUE, And, Atom, Eventually, FalseF, Globally, Iff,
                                 Implies, LassoTrace, Next, Not, Or, Release, TrueF, Until,
                                 WeakUntil, subformulas)
from hyperstrat.tsys import StrategySystem, TransitionSystem, valuations

UNARY = (Not, Next, Eventually, Globally)
BINARY = (And, Or, Implies, Iff, Until, Release, WeakUntil)


def random_formula(rng, depth=4, aps=("a", "b"), tv=None):
    if depth == 0 or rng.random() < 0.2:
        r = rng.random()
        if r < 0.06:
            return TRUE
        if r < 0.1:
            return FALSE
        return Atom(rng.choice(aps), tv)
    if rng.random() < 0.4:
        return rng.choice(UNARY)(random_formula(rng, depth - 1, aps, tv))
    op = rng.choice(BINARY)
    return op(random_formula(rng, depth - 1, aps, tv), random_formula(rng, depth - 1, aps, tv))


def closure_size(f):
    return len(set(subformulas(f)))


def random_small_formula(rng, max_closure=8, **kw):
    while True:
        f = random_formula(rng, **kw)
        if closure_size(f) <= max_closure:
            return f


def random_lasso(rng, aps=("a", "b"), max_stem=4, max_loop=4):
    def letter():
        return frozenset(a for a in aps if rng.random() < 0.5)
    stem = tuple(letter() for _ in range(rng.randint(0, max_stem)))
    loop = tuple(letter() for _ in range(rng.randint(1, max_loop)))
    return LassoTrace(stem, loop)


def naive_eval(f, w: LassoTrace, i: int = 0) -> bool:
    """Direct recursive evaluation on a single lasso (atoms read ``w`` ignoring
    trace variables). Future positions are scanned over one stem plus one
    period, after which the suffixes repeat."""
    horizon = len(w.stem) + len(w.loop)

    def norm(j):
        if j < len(w.stem):
            return j
        return len(w.stem) + (j - len(w.stem)) % len(w.loop)

    memo = {}

    def ev(g, j):
        j = norm(j)
        key = (g, j)
        if key in memo:
            return memo[key]
        if isinstance(g, TrueF):
            r = True
        elif isinstance(g, FalseF):
            r = False
        elif isinstance(g, Atom):
            r = g.ap in w[j]
        elif isinstance(g, Not):
            r = not ev(g.arg, j)
        elif isinstance(g, Next):
            r = ev(g.arg, j + 1)
        elif isinstance(g, Eventually):
            r = any(ev(g.arg, j + d) for d in range(horizon + 1))
        elif isinstance(g, Globally):
            r = all(ev(g.arg, j + d) for d in range(horizon + 1))
        elif isinstance(g, And):
            r = ev(g.left, j) and ev(g.right, j)
        elif isinstance(g, Or):
            r = ev(g.left, j) or ev(g.right, j)
        elif isinstance(g, Implies):
            r = (not ev(g.left, j)) or ev(g.right, j)
        elif isinstance(g, Iff):
            r = ev(g.left, j) == ev(g.right, j)
        elif isinstance(g, Until):
            r = _until(lambda d: ev(g.left, j + d), lambda d: ev(g.right, j + d), horizon)
        elif isinstance(g, WeakUntil):
            r = (_until(lambda d: ev(g.left, j + d), lambda d: ev(g.right, j + d), horizon)
                 or all(ev(g.left, j + d) for d in range(horizon + 1)))
        elif isinstance(g, Release):
            # b R a  ==  a W (a & b)
            r = (_until(lambda d: ev(g.right, j + d),
                        lambda d: ev(g.right, j + d) and ev(g.left, j + d), horizon)
                 or all(ev(g.right, j + d) for d in range(horizon + 1)))
        else:
            raise TypeError(g)
        memo[key] = r
        return r

    return ev(f, i)


def _until(a, b, horizon):
    for d in range(horizon + 1):
        if b(d):
            return True
        if not a(d):
            return False
    return False


def has_rejecting_cycle(n, succ, rejecting, initial=(0,)):
    """Plain DFS oracle: is some rejecting vertex reachable and on a cycle?"""
    reach = set(initial)
    stack = list(initial)
    while stack:
        v = stack.pop()
        for w in succ[v]:
            if w not in reach:
                reach.add(w)
                stack.append(w)
    for r in reach:
        if r not in rejecting:
            continue
        seen = set()
        stack = list(succ[r])
        while stack:
            v = stack.pop()
            if v == r:
                return True
            if v not in seen:
                seen.add(v)
                stack.extend(succ[v])
    return False


def random_system(rng, inputs=("a",), outputs=("o",), n_states=None, max_states=3):
    n = n_states or rng.randint(1, max_states)
    states = tuple(f"s{i}" for i in range(n))
    trans = {(s, v): rng.choice(states) for s in states for v in valuations(inputs)}
    label = {s: frozenset(o for o in outputs if rng.random() < 0.5) for s in states}
    return TransitionSystem(inputs, outputs, states, "s0", trans, label)


def all_systems(inputs, outputs, n):
    """Every system with states 0..n-1 and initial 0 (no isomorph pruning)."""
    vals = valuations(inputs)
    labs = valuations(outputs)
    keys = [(s, v) for s in range(n) for v in vals]
    for targets in itertools.product(range(n), repeat=len(keys)):
        for lab in itertools.product(labs, repeat=n):
            yield TransitionSystem(inputs, outputs, tuple(range(n)), 0,
                                   dict(zip(keys, targets)), dict(enumerate(lab)))


def random_strategy(rng, reads, writes, size=2, lookahead=0):
    rv, wv = valuations(reads), valuations(writes)
    trans = {(x, v): rng.randrange(size) for x in range(size) for v in rv}
    out = {(x, v): rng.choice(wv) for x in range(size) for v in rv}
    init = {key: rng.randrange(size) for key in itertools.product(rv, repeat=lookahead)}
    return StrategySystem(reads, writes, tuple(range(size)), init, trans, out, lookahead)


def zip_lassos(traces, indices=None):
    """Zip lassos into one lasso over ``a@i`` propositions."""
    indices = indices or list(range(1, len(traces) + 1))
    n = max(len(t.stem) for t in traces)
    period = 1
    for t in traces:
        period = period * len(t.loop) // math.gcd(period, len(t.loop))

    def at(i):
        return frozenset(f"{x}@{j}" for t, j in zip(traces, indices) for x in t[i])
    return LassoTrace(tuple(at(i) for i in range(n)), tuple(at(i) for i in range(n, n + period)))


def unzip_lasso(w, index, props):
    """Project a zipped lasso on copy ``index`` and strip the ``@index`` suffix."""
    keep = {f"{p}@{index}": p for p in props}
    return LassoTrace(tuple(frozenset(keep[x] for x in l if x in keep) for l in w.stem),
                      tuple(frozenset(keep[x] for x in l if x in keep) for l in w.loop))


def check_composition_properties(sys, stem_max=1, loop_max=2):
    """Trace-set identities for self-composition, product, unzip and prophecy
    extension, compared through bounded lasso enumeration. Returns a list of
    failure descriptions (empty when all hold)."""
    from hyperstrat.tsys import add_prophecy, enumerate_lassos, product, self_composition
    fails = []
    base = sorted(enumerate_lassos(sys, stem_max, loop_max), key=repr)
    comp = enumerate_lassos(self_composition(sys, 2), stem_max, loop_max)
    expect = {zip_lassos([p, q]).canonical() for p in base for q in base}
    if comp != expect:
        fails.append("self_composition(2) trace set differs from zipped pairs")
    for i in (1, 2):
        if {unzip_lasso(w, i, sys.props).canonical() for w in comp} != set(base):
            fails.append(f"unzip of copy {i} differs from base traces")
    one = enumerate_lassos(self_composition(sys, 1), stem_max, loop_max)
    if one != {zip_lassos([p]).canonical() for p in base}:
        fails.append("self_composition(1) is not the renamed system")
    a1 = self_composition(sys, 1, [1])
    a2 = self_composition(sys, 1, [2])
    prod = enumerate_lassos(product(a1, a2), stem_max, loop_max)
    if prod != comp:
        fails.append("product of renamed copies differs from self_composition")
    p = "proph"
    ext = add_prophecy(sys, p)
    proj = {t.project(sys.props).canonical() for t in enumerate_lassos(ext, stem_max, loop_max)}
    if proj != set(base):
        fails.append("prophecy extension changes projected traces")
    return fails


def automaton_suite(seed=0, n_formulas=200, lassos_per=10):
    """NBA/UCW membership versus exact evaluation on random formulas and lassos.

    Returns (cases checked, list of mismatches)."""
    from hyperstrat.automata import (dualize_to_ucw, ltl_to_nba, nba_accepts_lasso,
                                     ucw_accepts_lasso)
    from hyperstrat.hyperltl import bounded_eval, negate_nnf, to_string
    rng = random.Random(seed)
    bad, cases = [], 0
    for _ in range(n_formulas):
        f = random_small_formula(rng)
        pos = ltl_to_nba(f, ("a", "b"))
        neg = ltl_to_nba(negate_nnf(f), ("a", "b"))
        ucw = dualize_to_ucw(neg)
        for _ in range(lassos_per):
            w = random_lasso(rng)
            truth = bounded_eval(f, w)
            got = (nba_accepts_lasso(pos, w), nba_accepts_lasso(neg, w),
                   ucw_accepts_lasso(ucw, w), ucw_accepts_lasso(dualize_to_ucw(pos), w))
            cases += 1
            if got != (truth, not truth, truth, not truth):
                bad.append((to_string(f), w, truth, got))
    return cases, bad


def _check_graph_case(n, edges, rej):
    from hyperstrat.mc import RunGraph, check_accepting, validate_annotation
    g = RunGraph.from_edges(n, edges, rej)
    acc = check_accepting(g)
    expect = not has_rejecting_cycle(n, g.succ, set(rej))
    if acc.accepting != expect:
        return "verdict"
    if acc.accepting:
        if not validate_annotation(g, acc.annotation):
            return "annotation"
        return None
    path = acc.stem
    if not path or path[0] not in g.initial or path[-1] != acc.loop[0]:
        return "stem"
    if any(b not in g.succ[a] for a, b in zip(path, path[1:])):
        return "stem edge"
    cyc = acc.loop + [acc.loop[0]]
    if any(b not in g.succ[a] for a, b in zip(cyc, cyc[1:])):
        return "loop edge"
    if not any(g.rejecting[v] for v in acc.loop):
        return "loop not rejecting"
    return None


def graph_suite(max_exhaustive=4, n_random=10 ** 4, random_sizes=(5, 6), seed=0):
    """check_accepting versus the DFS rejecting-cycle oracle.

    Exhaustive over every edge set and rejecting subset up to ``max_exhaustive``
    vertices (initial vertex 0), then ``n_random`` random graphs. Returns
    (cases, list of failures)."""
    cases, bad = 0, []
    for n in range(1, max_exhaustive + 1):
        pairs = [(a, b) for a in range(n) for b in range(n)]
        for mask in range(1 << len(pairs)):
            edges = [p for j, p in enumerate(pairs) if mask >> j & 1]
            for rm in range(1 << n):
                rej = [v for v in range(n) if rm >> v & 1]
                cases += 1
                err = _check_graph_case(n, edges, rej)
                if err:
                    bad.append((n, edges, rej, err))
    rng = random.Random(seed)
    for _ in range(n_random):
        n = rng.choice(random_sizes)
        dens = rng.random() * 0.5
        edges = [(a, b) for a in range(n) for b in range(n) if rng.random() < dens]
        rej = [v for v in range(n) if rng.random() < 0.3]
        cases += 1
        err = _check_graph_case(n, edges, rej)
        if err:
            bad.append((n, edges, rej, err))
    return cases, bad


# ---------------------------------------------------------------------------
# desk corpus of synthesis instances
# ---------------------------------------------------------------------------

def plain_automaton(body):
    """UCW for an LTL body over plain (un-indexed) propositions."""
    from hyperstrat.automata import dualize_to_ucw, ltl_to_nba
    from hyperstrat.hyperltl import negate_nnf
    return dualize_to_ucw(ltl_to_nba(negate_nnf(body)))


def synth_corpus():
    """(name, problem, bounds) triples; every bound range is small enough for
    the brute-force oracle unless the name ends in ``[smt-only]``."""
    from hyperstrat import corpus as C
    from hyperstrat.synth import GIVEN, SynthBounds, SynthProblem
    o, i = Atom("o"), Atom("i")
    out = []

    def strat(name, sys, f, pro=(), **b):
        out.append((name, SynthProblem(C.formula(f), C.system(sys), prophecies=pro),
                    SynthBounds(GIVEN, 1, 0, **b)))

    def system(name, f, sig, **b):
        ins, outs = C.signature(sig)
        out.append((name, SynthProblem(C.formula(f), None, ins, outs), SynthBounds(1, 1, 0, **b)))

    strat("x-example k<=0", "free_a", "x_example", max_strategy=2)
    strat("x-example k<=1", "free_a", "x_example", max_strategy=2, max_lookahead=1)
    strat("x-example depth 2 k<=2", "free_a", "x_example_depth2", max_strategy=1,
          max_lookahead=2)
    strat("x-example false k<=2", "free_a", "x_example_false", max_strategy=1, max_lookahead=2)
    strat("x-example prophecy", "free_a", "x_example", C.prophecies("x_prophecy"),
          max_strategy=1)
    strat("x-example depth 2 prophecy", "free_a", "x_example_depth2",
          C.prophecies("x_prophecy_depth2"), max_strategy=1)
    strat("copycat", "free_a", "copycat", max_strategy=1)
    strat("mutex symmetry strategy", "mutex_arbiter", "mutex_symmetry", max_strategy=1)
    strat("gni replay [smt-only]", "gni", "gni", max_strategy=1)
    system("mutex ltl", "mutex_ltl", "mutex_signature", max_system=2)
    system("mutex symmetry <=2", "mutex_symmetry", "mutex_signature", max_system=2)
    system("ef tautology", "ef_tautology", "io_signature", max_system=1)
    system("ef uniform output", "ef_uniform_output", "io_signature", max_system=1)
    system("ef copy input <=2", "ef_copy_input", "io_signature", max_system=2, max_strategy=2)
    out.append(("lookahead G(o <-> X i)",
                SynthProblem(automaton=plain_automaton(Globally(Iff(o, Next(i)))),
                             inputs=("i",), outputs=("o",)),
                SynthBounds(GIVEN, 1, 0, max_strategy=2, max_lookahead=1)))
    out.append(("lookahead G(o <-> i)",
                SynthProblem(automaton=plain_automaton(Globally(Iff(o, i))),
                             inputs=("i",), outputs=("o",)),
                SynthBounds(GIVEN, 1, 0, max_strategy=1, max_lookahead=1)))
    return out


def independent_check(problem, sol):
    """Re-verify a decoded solution through the public model-checking entry points."""
    from hyperstrat.hyperltl import Fragment, classify_prefix
    from hyperstrat.mc import (build_run_graph, check_accepting, mc_exists_forall,
                               mc_forall_exists, mc_universal)
    if problem.kind == "lookahead":
        wire = lambda ps: TransitionSystem(tuple(ps), (), ("w",), "w",
                                           {("w", v): "w" for v in valuations(ps)},
                                           {"w": frozenset()})
        g = build_run_graph(problem.automaton, wire(problem.inputs), wire(problem.outputs),
                            sol.strategy)
        return check_accepting(g).accepting
    sys, f, _ = problem.prepared()
    sys = sol.system or sys
    kind = classify_prefix(f).kind
    if kind is Fragment.UNIVERSAL:
        return mc_universal(sys, f).holds
    if kind is Fragment.FORALL_EXISTS:
        return mc_forall_exists(sys, f, sol.strategy).holds
    return mc_exists_forall(sys, f, sol.strategy).holds


def pad_lookahead(st):
    """A (k+1)-lookahead strategy behaving like the k-lookahead ``st``: its
    state additionally remembers the one letter it has read ahead."""
    letters = valuations(st.reads)
    states = tuple((x, v) for x in st.states for v in letters)
    init = {key: (st.init[key[:-1]], key[-1])
            for key in itertools.product(letters, repeat=st.lookahead + 1)}
    trans = {((x, v), w): (st.trans[(x, v)], w) for (x, v) in states for w in letters}
    out = {((x, v), w): st.out[(x, v)] for (x, v) in states for w in letters}
    return StrategySystem(st.reads, st.writes, states, init, trans, out, st.lookahead + 1)
