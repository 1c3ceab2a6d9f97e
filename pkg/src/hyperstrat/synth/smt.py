"""SMT-LIB 2.6 emission and an external-solver driver."""

from __future__ import annotations

import os
import re
import shlex
import subprocess
from dataclasses import dataclass, field

from .encode import ConstraintSystem

__all__ = ["emit_smtlib", "run_solver", "SolverAnswer", "SolverError", "parse_model",
           "default_solver_cmd", "DEFAULT_TIMEOUT"]

DEFAULT_TIMEOUT = 600.0


def default_solver_cmd() -> str:
    return os.environ.get("HLV_SOLVER_CMD") or "z3 -in"


def emit_smtlib(c: ConstraintSystem) -> str:
    """Render ``c`` as a QF_UFLIA script ending in ``(check-sat)`` and ``(get-model)``."""
    lines = ["(set-logic QF_UFLIA)", "(set-option :produce-models true)"]
    lines.append(f"; sorts {' '.join(f'{k}={v}' for k, v in c.sorts.items())}")
    lines.append(f"; grounded {c.grounded} clauses {len(c.clauses)}")
    for i in range(c.num_vertices):
        lines.append(f"(declare-fun lb_{i} () Bool)")
        lines.append(f"(declare-fun ln_{i} () Int)")
    for name, sort in c.decls:
        lines.append(f"(declare-fun {name} () {sort})")
    for name, hi in c.ranges:
        lines.append(f"(assert (and (<= 0 {name}) (< {name} {hi})))")
    for t in c.initial:
        lines.append(f"(assert {t})")
    for t in c.ln_axioms:
        lines.append(f"(assert {t})")
    for t in c.clauses:
        lines.append(f"(assert {t})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


class SolverError(RuntimeError):
    pass


@dataclass
class SolverAnswer:
    status: str  # "sat" | "unsat"
    model: str = ""
    elapsed: float = 0.0
    stderr: str = field(default="", repr=False)

    @property
    def sat(self) -> bool:
        return self.status == "sat"


def run_solver(script: str, solver_cmd: str | None = None,
               timeout: float = DEFAULT_TIMEOUT) -> SolverAnswer:
    """Pipe ``script`` into the solver and classify its first status token."""
    import time
    cmd = shlex.split(solver_cmd or default_solver_cmd())
    if not cmd:
        raise SolverError("empty solver command")
    start = time.perf_counter()
    try:
        proc = subprocess.run(cmd, input=script, capture_output=True, text=True,
                              timeout=timeout)
    except FileNotFoundError as e:
        raise SolverError(f"cannot launch solver {cmd[0]!r}: {e}") from e
    except subprocess.TimeoutExpired as e:
        raise SolverError(f"solver timed out after {timeout} s") from e
    elapsed = time.perf_counter() - start
    out = proc.stdout.strip()
    first, _, rest = out.partition("\n")
    first = first.strip()
    if first == "sat":
        return SolverAnswer("sat", rest, elapsed, proc.stderr)
    if first == "unsat":
        # get-model after unsat yields an error line; that is expected
        return SolverAnswer("unsat", "", elapsed, proc.stderr)
    detail = (out or proc.stderr).strip().splitlines()
    msg = detail[0] if detail else f"exit code {proc.returncode}"
    raise SolverError(f"unexpected solver answer: {msg}")


_DEF = re.compile(r"\(define-fun\s+([^\s()]+)\s+\(\)\s+(Int|Bool)\s+"
                  r"(\(\s*-\s*\d+\s*\)|-?\d+|true|false)\s*\)", re.S)


def parse_model(text: str) -> dict[str, int | bool]:
    """Values of nullary ``define-fun`` entries; function definitions are ignored."""
    values: dict[str, int | bool] = {}
    for name, sort, val in _DEF.findall(text):
        if sort == "Bool":
            values[name] = val == "true"
        else:
            values[name] = int(val.replace("(", "").replace(")", "").replace(" ", ""))
    return values
