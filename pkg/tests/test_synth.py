import shutil
from dataclasses import replace

import pytest

from helpers import independent_check, pad_lookahead, plain_automaton, synth_corpus
from hyperstrat import corpus
from hyperstrat.hyperltl import Atom, Globally, Iff, Next, parse_formula
from hyperstrat.mc import formula_automaton
from hyperstrat.tsys import valuations
from hyperstrat.synth import (GIVEN, CandidateCapError, ClauseCapError, ConstraintSystem,
                              InternalError, SolverError, SynthBounds, SynthProblem,
                              bound_triples, closed_form_count, decode_solution,
                              emit_smtlib, encode_lookahead_synthesis, encode_problem,
                              encode_strategy_synthesis, parse_model, run_solver,
                              solve_bruteforce, synthesis_loop)

pytestmark = pytest.mark.skipif(shutil.which("z3") is None, reason="z3 not on PATH")

E = frozenset()


def x_problem(**kw):
    return SynthProblem(corpus.formula("x_example"), corpus.system("free_a"), **kw)


def solve(problem, bounds):
    c = encode_problem(problem, bounds)
    return c, run_solver(emit_smtlib(c))


# -- bounds -----------------------------------------------------------------

def test_bounds_validation():
    with pytest.raises(ValueError):
        SynthBounds(GIVEN, 0)
    with pytest.raises(ValueError):
        SynthBounds(GIVEN, 1, -1)
    with pytest.raises(ValueError):
        SynthBounds(0)
    assert SynthBounds(3, 1, 0).triple == (3, 1, 0)


def test_bound_order_is_lexicographic():
    p = SynthProblem(corpus.formula("mutex_symmetry"), None, *corpus.signature("mutex_signature"))
    got = [b.triple for b in bound_triples(p, SynthBounds(1, 1, 0, max_system=2,
                                                          max_strategy=2, max_lookahead=1))]
    assert got == [(1, 1, 0), (1, 1, 1), (1, 2, 0), (1, 2, 1),
                   (2, 1, 0), (2, 1, 1), (2, 2, 0), (2, 2, 1)]
    u = SynthProblem(corpus.formula("mutex_ltl"), None, *corpus.signature("mutex_signature"))
    assert [b.triple for b in bound_triples(u, SynthBounds(1, 1, 0, max_system=2,
                                                           max_strategy=3))] == \
        [(1, 1, 0), (2, 1, 0)]


# -- encoding ---------------------------------------------------------------

def test_trivial_forall_exists_sat():
    f = parse_formula("forall p. exists q. true")
    p = SynthProblem(f, corpus.system("free_a"))
    _, ans = solve(p, SynthBounds(GIVEN, 1, 0))
    assert ans.sat


def test_x_example_k0_unsat():
    for x in (1, 2):
        _, ans = solve(x_problem(), SynthBounds(GIVEN, x, 0))
        assert ans.status == "unsat"


def test_x_example_k1_sat_and_decodes_replay():
    p = x_problem()
    c, ans = solve(p, SynthBounds(GIVEN, 1, 1))
    assert ans.sat
    sol = decode_solution(ans.model, c, p)
    st = sol.strategy
    assert st.lookahead == 1 and len(st.states) == 1
    # the chosen a@2 equals the next universal a, i.e. the letter just read
    for v in (E, frozenset({"a@1"})):
        assert st.out[(0, v)] == (frozenset({"a@2"}) if v else E)
    assert sol.bounds == (GIVEN, 1, 1)


def test_mutex_symmetry_strategy_sat():
    p = SynthProblem(corpus.formula("mutex_symmetry"), corpus.system("mutex_arbiter"))
    c, ans = solve(p, SynthBounds(GIVEN, 1, 0))
    assert ans.sat
    sol = decode_solution(ans.model, c, p)
    assert len(sol.strategy.states) == 1 and sol.system is None


@pytest.mark.parametrize("name", ["x_example", "copycat", "x_example_depth2"])
@pytest.mark.parametrize("x,k", [(1, 0), (2, 0), (1, 1), (2, 1), (1, 2)])
def test_grounded_count_matches_closed_form(name, x, k):
    p = SynthProblem(corpus.formula(name), corpus.system("free_a"))
    b = SynthBounds(GIVEN, x, k)
    c = encode_problem(p, b)
    assert c.grounded == c.closed_form == closed_form_count(c.sorts)
    full = encode_problem(p, b, prune=False)
    assert len(full.clauses) == full.closed_form


@pytest.mark.parametrize("size", [1, 2])
def test_grounded_count_system_synthesis(size):
    p = SynthProblem(corpus.formula("mutex_symmetry"), None, *corpus.signature("mutex_signature"))
    c = encode_problem(p, SynthBounds(size, 1, 0), prune=False)
    assert len(c.clauses) == c.grounded == c.closed_form
    ef = SynthProblem(corpus.formula("ef_copy_input"), None, *corpus.signature("io_signature"))
    c = encode_problem(ef, SynthBounds(size, 2, 0), prune=False)
    assert len(c.clauses) == c.grounded == c.closed_form


def test_lookahead_k0_matches_strategy_encoding():
    f = corpus.formula("x_example")
    aut = formula_automaton(f.body, f.variables)
    for x in (1, 2):
        b = SynthBounds(GIVEN, x, 0)
        s = encode_strategy_synthesis(corpus.system("free_a"), f, aut, b)
        la = encode_lookahead_synthesis(aut, 0, b, ("a@1",), ("a@2",))
        assert set(s.clauses) == set(la.clauses)
        assert s.initial == la.initial and s.grounded == la.grounded


def test_lookahead_only_for_forall_exists():
    p = SynthProblem(corpus.formula("ef_uniform_output"), corpus.system("const_o"))
    with pytest.raises(ValueError):
        encode_problem(p, SynthBounds(GIVEN, 1, 1))


def test_strategy_encoding_needs_given_system():
    f = corpus.formula("x_example")
    with pytest.raises(ValueError):
        encode_strategy_synthesis(corpus.system("free_a"), f,
                                  formula_automaton(f.body, f.variables), SynthBounds(2, 1, 0))


def test_clause_cap():
    with pytest.raises(ClauseCapError):
        encode_problem(x_problem(), SynthBounds(GIVEN, 2, 1, clause_cap=10))


# -- SMT-LIB emission and solver driver --------------------------------------

def test_emit_deterministic():
    b = SynthBounds(GIVEN, 2, 1)
    s1 = emit_smtlib(encode_problem(x_problem(), b))
    s2 = emit_smtlib(encode_problem(x_problem(), b))
    assert s1 == s2
    assert s1.startswith("(set-logic QF_UFLIA)")
    assert s1.rstrip().endswith("(check-sat)\n(get-model)")


def test_empty_constraint_system_is_sat():
    c = ConstraintSystem({}, [], [], 0, 0, [], [], 0)
    ans = run_solver(emit_smtlib(c))
    assert ans.sat and parse_model(ans.model) == {}


def test_run_solver_examples():
    assert run_solver("(check-sat)").sat
    assert run_solver("(assert false)\n(check-sat)").status == "unsat"
    with pytest.raises(SolverError):
        run_solver("(check-sat)", "no-such-solver-binary -in")
    with pytest.raises(SolverError):
        run_solver("(check-sat)", "echo maybe")


def test_parse_model():
    text = """(
  (define-fun x () Int (- 3))
  (define-fun y () Int 12)
  (define-fun b () Bool true)
  (define-fun f ((x Int)) Int 0)
)"""
    assert parse_model(text) == {"x": -3, "y": 12, "b": True}


def test_decode_failure_is_internal_error():
    p = x_problem()
    c = encode_problem(p, SynthBounds(GIVEN, 1, 0))
    with pytest.raises(InternalError):
        decode_solution("", c, p)


# -- loops -----------------------------------------------------------------

def test_synthesis_loop_trivial():
    p = SynthProblem(parse_formula("forall p. exists q. true"), corpus.system("free_a"))
    r = synthesis_loop(p, SynthBounds(GIVEN, 1, 0, max_strategy=3, max_lookahead=2))
    assert r.realizable and r.bounds == (GIVEN, 1, 0) and len(r.attempts) == 1


def test_synthesis_loop_x_example(tmp_path):
    dump = tmp_path / "x.smt2"
    r = synthesis_loop(x_problem(), SynthBounds(GIVEN, 1, 0, max_strategy=2, max_lookahead=1),
                       dump_smt=str(dump))
    assert r.realizable and r.bounds == (GIVEN, 1, 1)
    assert [a[:2] for a in r.attempts] == [((GIVEN, 1, 0), "unsat"), ((GIVEN, 1, 1), "sat")]
    assert dump.read_text().startswith("(set-logic")
    d = r.to_json()
    assert d["schema"] == 1 and d["result"] == "realizable"


def test_exhausted_message():
    r = synthesis_loop(x_problem(), SynthBounds(GIVEN, 1, 0, max_strategy=2))
    assert not r.realizable and "does not show unrealizability" in r.message
    p = SynthProblem(corpus.formula("ef_copy_input"), None, *corpus.signature("io_signature"))
    r = synthesis_loop(p, SynthBounds(1, 1, 0, max_system=1))
    assert not r.realizable and "single universal quantifier" in r.message


def test_solver_errors_propagate():
    with pytest.raises(SolverError):
        synthesis_loop(x_problem(), SynthBounds(GIVEN, 1, 0), solver_cmd="no-such-solver")


def test_bruteforce_cap():
    p = SynthProblem(corpus.formula("gni"), corpus.system("gni"))
    with pytest.raises(CandidateCapError):
        solve_bruteforce(p, SynthBounds(GIVEN, 1, 0))


def test_exists_forall_examples():
    sig = corpus.signature("io_signature")
    taut = SynthProblem(corpus.formula("ef_tautology"), None, *sig)
    assert synthesis_loop(taut, SynthBounds(1, 1, 0)).bounds == (1, 1, 0)
    uni = SynthProblem(corpus.formula("ef_uniform_output"), None, *sig)
    r = synthesis_loop(uni, SynthBounds(1, 1, 0))
    assert r.realizable and len(r.solution.system.states) == 1
    copy = SynthProblem(corpus.formula("ef_copy_input"), None, *sig)
    r = synthesis_loop(copy, SynthBounds(1, 1, 0, max_system=3, max_strategy=3))
    assert not r.realizable and len(r.attempts) == 9


def test_mutex_ltl_system_sizes():
    p = SynthProblem(corpus.formula("mutex_ltl"), None, *corpus.signature("mutex_signature"))
    r = synthesis_loop(p, SynthBounds(1, 1, 0, max_system=3))
    assert r.bounds == (2, 1, 0)
    assert [a[1] for a in r.attempts] == ["unsat", "sat"]
    assert r.solution.strategy is None and len(r.solution.system.states) == 2


def test_lookahead_monotone_only_with_memory():
    # k = 1 works with one state; k = 2 must remember the skipped letter
    p = x_problem()
    assert solve(p, SynthBounds(GIVEN, 1, 1))[1].sat
    assert solve(p, SynthBounds(GIVEN, 1, 2))[1].status == "unsat"
    assert solve(p, SynthBounds(GIVEN, 2, 2))[1].sat


def test_standalone_lookahead():
    o, i = Atom("o"), Atom("i")
    p = SynthProblem(automaton=plain_automaton(Globally(Iff(o, Next(i)))),
                     inputs=("i",), outputs=("o",))
    r = synthesis_loop(p, SynthBounds(GIVEN, 1, 0, max_strategy=2, max_lookahead=2))
    assert r.bounds == (GIVEN, 1, 1)
    assert r.solution.strategy.lookahead == 1


# -- corpus-wide properties ---------------------------------------------------

CORPUS = synth_corpus()


SMALL = 20_000  # clause budget for the extra solver calls below


def solve_small(problem, bounds):
    try:
        c = encode_problem(problem, replace(bounds, clause_cap=SMALL))
    except ClauseCapError:
        return None, None
    return c, run_solver(emit_smtlib(c))


@pytest.mark.parametrize("name,problem,bounds", CORPUS, ids=[c[0] for c in CORPUS])
def test_soundness_and_monotonicity(name, problem, bounds):
    r = synthesis_loop(problem, bounds)
    if not r.realizable:
        return
    assert independent_check(problem, r.solution)
    s, x, k = r.bounds
    if problem.has_strategy and problem.reads_universal:
        # one more letter of lookahead, paid for by remembering it in the state
        padded = pad_lookahead(r.solution.strategy)
        assert independent_check(problem, replace(r.solution, strategy=padded))
        wider = x * len(valuations(r.solution.strategy.reads))
        c, ans = solve_small(problem, SynthBounds(s, wider, k + 1))
        if ans is not None:
            assert ans.sat, "realizable at k but not at k + 1 after padding"
            assert independent_check(problem, decode_solution(ans.model, c, problem))
    if problem.has_strategy:
        c, ans = solve_small(problem, SynthBounds(s, x + 1, k))
        if ans is not None:
            assert ans.sat
            assert independent_check(problem, decode_solution(ans.model, c, problem))


@pytest.mark.slow
@pytest.mark.parametrize("name,problem,bounds",
                         [c for c in CORPUS if "[smt-only]" not in c[0]],
                         ids=[c[0] for c in CORPUS if "[smt-only]" not in c[0]])
def test_completeness_against_bruteforce(name, problem, bounds):
    r = synthesis_loop(problem, bounds)
    q = solve_bruteforce(problem, bounds)
    assert r.realizable == q.realizable
    assert r.bounds == q.bounds
    if q.realizable:
        assert independent_check(problem, q.solution)
