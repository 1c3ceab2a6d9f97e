"""Command-line front end.

Exit codes: 0 holds / realizable, 1 fails (for strategy-based checks: the
strategy was refuted, the property may still hold), 2 unknown / bounds
exhausted, 3 usage, input or solver error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from .hyperltl import (Formula, FormulaScopeError, FormulaSyntaxError, Fragment,
                       classify_prefix, parse_body, parse_formula)
from .mc import (FragmentError, RunGraphSizeError, Verdict, apply_prophecy, copy_layout,
                 formula_automaton, mc_exists_forall, mc_existential, mc_forall_exists,
                 mc_universal)
from .tsys import IncompleteSystemError, ProphecySpec, StrategySystem, TransitionSystem

EXIT_OK, EXIT_FAIL, EXIT_UNKNOWN, EXIT_ERROR = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_formula(path) -> Formula:
    return parse_formula(Path(path).read_text(encoding="utf-8"))


def load_prophecies(path) -> list[ProphecySpec]:
    """JSON list of ``{"prop": name, "guard": formula body}``."""
    data = _read_json(path)
    if isinstance(data, dict):
        data = [data]
    return [ProphecySpec(d["prop"], parse_body(d["guard"])) for d in data]


def load_strategy(path, f: Formula) -> StrategySystem:
    uni, ex = copy_layout(f)
    d = _read_json(path)
    frag = classify_prefix(f)
    read_index = uni if frag.kind is Fragment.FORALL_EXISTS else []
    return StrategySystem.from_json(d, read_index, ex)


def load_signature(args) -> tuple[tuple[str, ...], tuple[str, ...]]:
    if args.signature:
        d = _read_json(args.signature)
        return tuple(d["inputs"]), tuple(d["outputs"])
    if args.system:
        s = TransitionSystem.load(args.system)
        return s.inputs, s.outputs
    if args.inputs is None and args.outputs is None:
        raise UsageError("synth-system needs --signature, --system or --inputs/--outputs")
    split = lambda s: tuple(x for x in (s or "").split(",") if x)
    return split(args.inputs), split(args.outputs)


def _write_json(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def _emit(report: dict, args):
    text = json.dumps(report, indent=2)
    print(text)
    if args.report:
        _write_json(args.report, report)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_parse(args) -> int:
    f = load_formula(args.formula)
    frag = classify_prefix(f)
    out = {"schema": 1, "formula": str(f), "fragment": frag.kind.value,
           "universal": list(f.universal_vars()), "existential": list(f.existential_vars())}
    if args.system:
        s = TransitionSystem.load(args.system)
        out["system"] = {"states": len(s.states), "inputs": list(s.inputs),
                         "outputs": list(s.outputs)}
    if args.strategy:
        st = load_strategy(args.strategy, f)
        out["strategy"] = {"states": len(st.states), "lookahead": st.lookahead}
    if args.dump_automaton:
        formula_automaton(f.body, f.variables).dump(args.dump_automaton)
    _emit(out, args)
    return EXIT_OK


def cmd_check(args) -> int:
    if not args.system:
        raise UsageError("check needs --system")
    sys_ = TransitionSystem.load(args.system)
    f = load_formula(args.formula)
    frag = classify_prefix(f)
    if frag.kind is Fragment.OTHER:
        raise UsageError("only formulas with at most one quantifier alternation are supported")
    prophecies = load_prophecies(args.prophecy) if args.prophecy else []
    if prophecies and frag.kind is not Fragment.FORALL_EXISTS:
        raise UsageError("prophecies only apply to forall-exists formulas")
    if prophecies:
        sys_, f = apply_prophecy(sys_, f, prophecies)
    if args.dump_automaton:
        formula_automaton(f.body, f.variables).dump(args.dump_automaton)
    kw = {"max_vertices": args.max_vertices} if args.max_vertices else {}
    try:
        if frag.kind is Fragment.UNIVERSAL:
            v = mc_universal(sys_, f, **kw)
        elif frag.kind is Fragment.EXISTENTIAL:
            v = mc_existential(sys_, f, **kw)
        else:
            if not args.strategy:
                raise UsageError(
                    "formulas with a quantifier alternation are checked against a strategy "
                    "for the existential player (strategic choice replaces existential "
                    "choice); pass --strategy")
            st = load_strategy(args.strategy, f)
            check = mc_forall_exists if frag.kind is Fragment.FORALL_EXISTS else mc_exists_forall
            v = check(sys_, f, st, **kw)
    except RunGraphSizeError as e:
        v = Verdict("unknown", message=str(e))
    report = v.to_json()
    report["fragment"] = frag.kind.value
    report["seed"] = args.seed
    _emit(report, args)
    if v.status == "fails" and frag.kind in (Fragment.FORALL_EXISTS, Fragment.EXISTS_FORALL):
        print(v.message, file=sys.stderr)
    return {"holds": EXIT_OK, "fails": EXIT_FAIL}.get(v.status, EXIT_UNKNOWN)


def _annotation_json(sol) -> dict:
    ann = sol.annotation
    return {"schema": 1, "bounds": list(sol.bounds), "vertices": len(ann.count),
            "reachable": [i for i, r in enumerate(ann.reachable) if r],
            "count": {str(i): c for i, c in enumerate(ann.count) if ann.reachable[i]}}


def _run_synth(args, problem, bounds, base_inputs) -> int:
    from .synth import solve_bruteforce, synthesis_loop
    log = (lambda s: print(s, file=sys.stderr)) if args.verbose else None
    if args.bruteforce:
        res = solve_bruteforce(problem, bounds, log=log)
    else:
        res = synthesis_loop(problem, bounds, solver_cmd=args.solver_cmd,
                             timeout=args.timeout, dump_smt=args.dump_smt, log=log)
    report = res.to_json()
    report["seed"] = args.seed
    if res.realizable:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        sol = res.solution
        files = {}
        f = problem.prepared()[1]
        if sol.strategy is not None:
            uni, ex = copy_layout(f)
            read_index = uni if sol.strategy.reads else []
            _write_json(out / "strategy.json",
                        sol.strategy.to_json(base_inputs, read_index, ex))
            files["strategy"] = str(out / "strategy.json")
        if sol.system is not None:
            sol.system.dump(out / "system.json")
            files["system"] = str(out / "system.json")
        _write_json(out / "annotation.json", _annotation_json(sol))
        files["annotation"] = str(out / "annotation.json")
        report["files"] = files
    _emit(report, args)
    return EXIT_OK if res.realizable else EXIT_UNKNOWN


def _bounds(args, system_given: bool):
    from .synth import GIVEN, SynthBounds
    for name in ("max_system", "max_strategy"):
        if getattr(args, name) is not None and getattr(args, name) < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be >= 1")
    if args.max_lookahead is not None and args.max_lookahead < 0:
        raise UsageError("--max-lookahead must be >= 0")
    return SynthBounds(GIVEN if system_given else 1, 1, 0,
                       max_system=args.max_system or 1,
                       max_strategy=args.max_strategy or 1,
                       max_lookahead=args.max_lookahead or 0)


def cmd_synth_strategy(args) -> int:
    from .synth import SynthProblem
    if not args.system:
        raise UsageError("synth-strategy needs --system")
    sys_ = TransitionSystem.load(args.system)
    f = load_formula(args.formula)
    frag = classify_prefix(f)
    if frag.kind not in (Fragment.FORALL_EXISTS, Fragment.EXISTS_FORALL):
        raise UsageError(f"synth-strategy needs a forall-exists or exists-forall formula, "
                         f"got {frag.kind.value}")
    prophecies = load_prophecies(args.prophecy) if args.prophecy else []
    problem = SynthProblem(f, sys_, prophecies=prophecies)
    base_inputs = problem.prepared()[0].inputs
    return _run_synth(args, problem, _bounds(args, True), base_inputs)


def cmd_synth_system(args) -> int:
    from .synth import SynthProblem
    f = load_formula(args.formula)
    frag = classify_prefix(f)
    if frag.kind is Fragment.OTHER:
        raise UsageError("only formulas with at most one quantifier alternation are supported")
    inputs, outputs = load_signature(args)
    problem = SynthProblem(f, None, inputs, outputs)
    return _run_synth(args, problem, _bounds(args, False), inputs)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperstrat",
                                description="HyperLTL model checking and synthesis")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, formula=True):
        if formula:
            sp.add_argument("--formula", required=True, metavar="PATH")
        sp.add_argument("--system", metavar="PATH")
        sp.add_argument("--report", metavar="PATH")
        sp.add_argument("--dump-automaton", metavar="PATH")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("parse", help="parse and validate inputs")
    common(sp)
    sp.add_argument("--strategy", metavar="PATH")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("check", help="model check a system")
    common(sp)
    sp.add_argument("--strategy", metavar="PATH")
    sp.add_argument("--prophecy", metavar="PATH")
    sp.add_argument("--max-vertices", type=int, default=None)
    sp.set_defaults(func=cmd_check)

    def synth_opts(sp):
        sp.add_argument("--max-system", type=int)
        sp.add_argument("--max-strategy", type=int)
        sp.add_argument("--max-lookahead", type=int)
        sp.add_argument("--solver-cmd", default=os.environ.get("HLV_SOLVER_CMD") or "z3 -in")
        sp.add_argument("--timeout", type=float, default=600.0, metavar="SEC")
        sp.add_argument("--dump-smt", metavar="PATH")
        sp.add_argument("--out-dir", default=".", metavar="DIR")
        sp.add_argument("--bruteforce", action="store_true",
                        help="enumerate candidates instead of calling the solver")
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("synth-strategy", help="synthesize a strategy for a given system")
    common(sp)
    sp.add_argument("--prophecy", metavar="PATH")
    synth_opts(sp)
    sp.set_defaults(func=cmd_synth_strategy)

    sp = sub.add_parser("synth-system", help="synthesize a system (and strategy)")
    common(sp)
    sp.add_argument("--signature", metavar="PATH", help='JSON {"inputs": [...], "outputs": [...]}')
    sp.add_argument("--inputs", help="comma-separated input propositions")
    sp.add_argument("--outputs", help="comma-separated output propositions")
    synth_opts(sp)
    sp.set_defaults(func=cmd_synth_system)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    random.seed(args.seed)
    from .synth import InternalError, SolverError
    try:
        return args.func(args)
    except InternalError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (UsageError, OSError, json.JSONDecodeError, KeyError, FormulaSyntaxError,
            FormulaScopeError, IncompleteSystemError, FragmentError, SolverError,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
