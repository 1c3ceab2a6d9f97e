"""Bounded synthesis of strategies and systems via grounded SMT constraints."""

from .encode import (DEFAULT_CLAUSE_CAP, GIVEN, ClauseCapError, ConstraintSystem,
                     SynthBounds, closed_form_count, encode_exists_forall_synthesis,
                     encode_forall_exists_synthesis, encode_lookahead_synthesis,
                     encode_strategy_synthesis)
from .smt import (DEFAULT_TIMEOUT, SolverAnswer, SolverError, default_solver_cmd,
                  emit_smtlib, parse_model, run_solver)
from .solve import (CandidateCapError, DecodedSolution, InternalError, SynthProblem,
                    SynthResult, bound_triples, decode_solution, encode_problem,
                    solve_bruteforce, synthesis_loop, verify_solution)

__all__ = [
    "GIVEN", "SynthBounds", "ConstraintSystem", "ClauseCapError", "DEFAULT_CLAUSE_CAP",
    "closed_form_count", "encode_strategy_synthesis", "encode_lookahead_synthesis",
    "encode_exists_forall_synthesis", "encode_forall_exists_synthesis", "emit_smtlib",
    "run_solver", "SolverAnswer", "SolverError", "parse_model", "default_solver_cmd",
    "DEFAULT_TIMEOUT", "SynthProblem", "DecodedSolution", "SynthResult", "InternalError",
    "CandidateCapError", "decode_solution", "encode_problem", "synthesis_loop",
    "solve_bruteforce", "bound_triples", "verify_solution",
]
