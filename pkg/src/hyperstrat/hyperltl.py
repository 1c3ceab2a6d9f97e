"""HyperLTL formulas: AST, parser, printer and exact evaluation on lassos.

Atoms carry a trace variable (``a[p]``). After :func:`zip_formula` every atom
refers to the single implicit trace and is named ``a@i`` where ``i`` is the
1-based position of the original trace variable in the zip order.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Quantifier", "Formula", "Atom", "TrueF", "FalseF", "Not", "And", "Or",
    "Implies", "Iff", "Next", "Until", "Release", "WeakUntil", "Eventually",
    "Globally", "TRUE", "FALSE", "FormulaSyntaxError", "FormulaScopeError",
    "parse_formula", "parse_body", "to_string", "desugar", "nnf", "negate_nnf",
    "FragmentClass", "Fragment", "classify_prefix", "zip_formula", "unzip_name",
    "LassoTrace", "bounded_eval", "atoms", "trace_vars", "subformulas",
    "conjuncts",
]


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

class QfFormula:
    """Base class of quantifier-free formula nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True, slots=True)
class Atom(QfFormula):
    ap: str
    tv: str | None = None


@dataclass(frozen=True, slots=True)
class TrueF(QfFormula):
    pass


@dataclass(frozen=True, slots=True)
class FalseF(QfFormula):
    pass


TRUE = TrueF()
FALSE = FalseF()


@dataclass(frozen=True, slots=True)
class Not(QfFormula):
    arg: QfFormula


@dataclass(frozen=True, slots=True)
class Next(QfFormula):
    arg: QfFormula


@dataclass(frozen=True, slots=True)
class Eventually(QfFormula):
    arg: QfFormula


@dataclass(frozen=True, slots=True)
class Globally(QfFormula):
    arg: QfFormula


@dataclass(frozen=True, slots=True)
class And(QfFormula):
    left: QfFormula
    right: QfFormula


@dataclass(frozen=True, slots=True)
class Or(QfFormula):
    left: QfFormula
    right: QfFormula


@dataclass(frozen=True, slots=True)
class Implies(QfFormula):
    left: QfFormula
    right: QfFormula


@dataclass(frozen=True, slots=True)
class Iff(QfFormula):
    left: QfFormula
    right: QfFormula


@dataclass(frozen=True, slots=True)
class Until(QfFormula):
    left: QfFormula
    right: QfFormula


@dataclass(frozen=True, slots=True)
class Release(QfFormula):
    left: QfFormula
    right: QfFormula


@dataclass(frozen=True, slots=True)
class WeakUntil(QfFormula):
    left: QfFormula
    right: QfFormula


_UNARY = (Not, Next, Eventually, Globally)
_BINARY = (And, Or, Implies, Iff, Until, Release, WeakUntil)


class Quantifier(enum.Enum):
    FORALL = "forall"
    EXISTS = "exists"


@dataclass(frozen=True)
class Formula:
    """A prenex HyperLTL formula: quantifier prefix plus quantifier-free body."""

    prefix: tuple[tuple[Quantifier, str], ...]
    body: QfFormula

    def __post_init__(self):
        names = [v for _, v in self.prefix]
        if len(set(names)) != len(names):
            raise FormulaScopeError("duplicate quantified trace variable")
        unbound = trace_vars(self.body) - set(names)
        if unbound:
            raise FormulaScopeError(
                "unbound trace variable " + ", ".join(sorted(unbound)))

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for _, v in self.prefix)

    def universal_vars(self) -> tuple[str, ...]:
        return tuple(v for q, v in self.prefix if q is Quantifier.FORALL)

    def existential_vars(self) -> tuple[str, ...]:
        return tuple(v for q, v in self.prefix if q is Quantifier.EXISTS)

    def __str__(self) -> str:
        head = "".join(f"{q.value} {v}. " for q, v in self.prefix)
        return head + to_string(self.body)


def children(f: QfFormula) -> tuple[QfFormula, ...]:
    if isinstance(f, _UNARY):
        return (f.arg,)
    if isinstance(f, _BINARY):
        return (f.left, f.right)
    return ()


def subformulas(f: QfFormula) -> list[QfFormula]:
    """All distinct subformulas, children before parents."""
    seen: dict[QfFormula, None] = {}

    def walk(g):
        if g in seen:
            return
        for c in children(g):
            walk(c)
        seen[g] = None

    walk(f)
    return list(seen)


def atoms(f: QfFormula) -> set[Atom]:
    return {g for g in subformulas(f) if isinstance(g, Atom)}


def trace_vars(f: QfFormula) -> set[str]:
    return {a.tv for a in atoms(f) if a.tv is not None}


def conjuncts(f: QfFormula) -> list[QfFormula]:
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

class FormulaSyntaxError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{msg} (line {line}, column {col})")
        self.line = line
        self.col = col


class FormulaScopeError(ValueError):
    pass


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<op><->|->|[!&|()\[\].])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_@']*)
""", re.VERBOSE)

_KEYWORDS = {"forall", "exists", "true", "false", "X", "F", "G", "U", "R", "W"}


@dataclass(frozen=True)
class _Tok:
    kind: str  # "op", "ident", "kw", "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}",
                                     line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            if kind == "ident" and s in _KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, s, line, pos - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


# binary operator levels, loosest first; value: (constructor, right-assoc)
_LEVELS = [
    {"<->": (Iff, False)},
    {"->": (Implies, True)},
    {"|": (Or, False)},
    {"&": (And, False)},
    {"U": (Until, True), "R": (Release, True), "W": (WeakUntil, True)},
]


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.take()
        if t.text != text or t.kind == "eof":
            raise FormulaSyntaxError(f"expected {text!r}, found {t.text or 'end of input'!r}",
                                     t.line, t.col)
        return t

    def error(self, msg: str):
        t = self.peek()
        raise FormulaSyntaxError(msg, t.line, t.col)

    def formula(self) -> Formula:
        prefix = []
        while self.peek().text in ("forall", "exists"):
            q = Quantifier(self.take().text)
            t = self.take()
            if t.kind != "ident":
                raise FormulaSyntaxError("expected trace variable", t.line, t.col)
            if any(v == t.text for _, v in prefix):
                raise FormulaScopeError(
                    f"duplicate quantified variable {t.text} (line {t.line}, column {t.col})")
            self.expect(".")
            prefix.append((q, t.text))
        body = self.binary(0)
        self.end()
        bound = {v for _, v in prefix}
        for a in sorted(atoms(body), key=repr):
            if a.tv is not None and a.tv not in bound:
                raise FormulaScopeError(f"unbound trace variable {a.tv}")
        return Formula(tuple(prefix), body)

    def end(self):
        if self.peek().kind != "eof":
            self.error(f"unexpected token {self.peek().text!r}")

    def binary(self, level: int) -> QfFormula:
        if level == len(_LEVELS):
            return self.unary()
        ops = _LEVELS[level]
        left = self.binary(level + 1)
        while self.peek().text in ops and self.peek().kind in ("op", "kw"):
            cls, right_assoc = ops[self.take().text]
            if right_assoc:
                return cls(left, self.binary(level))
            left = cls(left, self.binary(level + 1))
        return left

    def unary(self) -> QfFormula:
        t = self.peek()
        if t.text == "!":
            self.take()
            return Not(self.unary())
        if t.kind == "kw" and t.text in ("X", "F", "G"):
            self.take()
            return {"X": Next, "F": Eventually, "G": Globally}[t.text](self.unary())
        return self.primary()

    def primary(self) -> QfFormula:
        t = self.take()
        if t.text == "(" and t.kind == "op":
            f = self.binary(0)
            self.expect(")")
            return f
        if t.kind == "kw" and t.text == "true":
            return TRUE
        if t.kind == "kw" and t.text == "false":
            return FALSE
        if t.kind == "ident":
            if self.peek().text == "[":
                self.take()
                v = self.take()
                if v.kind != "ident":
                    raise FormulaSyntaxError("expected trace variable", v.line, v.col)
                self.expect("]")
                return Atom(t.text, v.text)
            return Atom(t.text)
        raise FormulaSyntaxError(
            f"unexpected {'end of input' if t.kind == 'eof' else repr(t.text)}",
            t.line, t.col)


def parse_formula(text: str) -> Formula:
    """Parse a quantified formula such as ``forall p. exists q. G (a[p] <-> a[q])``.

    Raises :class:`FormulaSyntaxError` (with line/column) on malformed input
    and :class:`FormulaScopeError` for unbound or duplicate trace variables.
    """
    return _Parser(text).formula()


def parse_body(text: str) -> QfFormula:
    """Parse a quantifier-free formula; trace variables are not checked."""
    p = _Parser(text)
    f = p.binary(0)
    p.end()
    return f


_SYMBOL = {And: "&", Or: "|", Implies: "->", Iff: "<->", Until: "U",
           Release: "R", WeakUntil: "W"}
_USYMBOL = {Not: "!", Next: "X ", Eventually: "F ", Globally: "G "}


def to_string(f: QfFormula) -> str:
    """Print with full parenthesization of binary operators (parse round-trips)."""
    if isinstance(f, Atom):
        return f.ap if f.tv is None else f"{f.ap}[{f.tv}]"
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, _UNARY):
        return _USYMBOL[type(f)] + to_string(f.arg)
    return f"({to_string(f.left)} {_SYMBOL[type(f)]} {to_string(f.right)})"


# ---------------------------------------------------------------------------
# Rewriting
# ---------------------------------------------------------------------------

def desugar(f: QfFormula) -> QfFormula:
    """Rewrite into Atom/Not/And/Or/Next/Until/True only."""
    if isinstance(f, (Atom, TrueF)):
        return f
    if isinstance(f, FalseF):
        return Not(TRUE)
    if isinstance(f, Not):
        return Not(desugar(f.arg))
    if isinstance(f, Next):
        return Next(desugar(f.arg))
    if isinstance(f, Eventually):
        return Until(TRUE, desugar(f.arg))
    if isinstance(f, Globally):
        return Not(Until(TRUE, Not(desugar(f.arg))))
    a, b = desugar(f.left), desugar(f.right)
    if isinstance(f, And):
        return And(a, b)
    if isinstance(f, Or):
        return Or(a, b)
    if isinstance(f, Implies):
        return Or(Not(a), b)
    if isinstance(f, Iff):
        return Or(And(a, b), And(Not(a), Not(b)))
    if isinstance(f, Until):
        return Until(a, b)
    if isinstance(f, Release):
        return Not(Until(Not(a), Not(b)))
    if isinstance(f, WeakUntil):
        return desugar(Or(Globally(f.left), Until(f.left, f.right)))
    raise TypeError(f"not a formula node: {f!r}")


def nnf(f: QfFormula, negate: bool = False) -> QfFormula:
    """Negation normal form over Atom, Not(Atom), True, False, And, Or, X, U, R."""
    if isinstance(f, Atom):
        return Not(f) if negate else f
    if isinstance(f, TrueF):
        return FALSE if negate else TRUE
    if isinstance(f, FalseF):
        return TRUE if negate else FALSE
    if isinstance(f, Not):
        return nnf(f.arg, not negate)
    if isinstance(f, Next):
        return Next(nnf(f.arg, negate))
    if isinstance(f, Eventually):
        return nnf(Until(TRUE, f.arg), negate)
    if isinstance(f, Globally):
        return nnf(Release(FALSE, f.arg), negate)
    a, b = f.left, f.right
    if isinstance(f, And):
        return (Or if negate else And)(nnf(a, negate), nnf(b, negate))
    if isinstance(f, Or):
        return (And if negate else Or)(nnf(a, negate), nnf(b, negate))
    if isinstance(f, Implies):
        return nnf(Or(Not(a), b), negate)
    if isinstance(f, Iff):
        return nnf(Or(And(a, b), And(Not(a), Not(b))), negate)
    if isinstance(f, Until):
        return (Release if negate else Until)(nnf(a, negate), nnf(b, negate))
    if isinstance(f, Release):
        return (Until if negate else Release)(nnf(a, negate), nnf(b, negate))
    if isinstance(f, WeakUntil):
        # a W b == b R (a | b)
        return nnf(Release(b, Or(a, b)), negate)
    raise TypeError(f"not a formula node: {f!r}")


def negate_nnf(f: QfFormula) -> QfFormula:
    return nnf(f, negate=True)


# ---------------------------------------------------------------------------
# Prefix classification and zipping
# ---------------------------------------------------------------------------

class Fragment(enum.Enum):
    UNIVERSAL = "UniversalOnly"
    EXISTENTIAL = "ExistentialOnly"
    FORALL_EXISTS = "ForallExists"
    EXISTS_FORALL = "ExistsForall"
    OTHER = "Other"


@dataclass(frozen=True)
class FragmentClass:
    kind: Fragment
    n: int = 0  # number of leading quantifiers
    m: int = 0  # number of trailing quantifiers
    alternations: int = 0

    def __str__(self) -> str:
        if self.kind in (Fragment.FORALL_EXISTS, Fragment.EXISTS_FORALL):
            return f"{self.kind.value}({self.n}, {self.m})"
        return self.kind.value


def classify_prefix(f: Formula) -> FragmentClass:
    qs = [q for q, _ in f.prefix]
    alternations = sum(1 for a, b in zip(qs, qs[1:]) if a is not b)
    if alternations == 0:
        if qs and qs[0] is Quantifier.EXISTS:
            return FragmentClass(Fragment.EXISTENTIAL, len(qs), 0, 0)
        return FragmentClass(Fragment.UNIVERSAL, len(qs), 0, 0)
    if alternations == 1:
        n = next(i for i, q in enumerate(qs) if q is not qs[0])
        kind = Fragment.FORALL_EXISTS if qs[0] is Quantifier.FORALL else Fragment.EXISTS_FORALL
        return FragmentClass(kind, n, len(qs) - n, 1)
    return FragmentClass(Fragment.OTHER, 0, 0, alternations)


def zip_formula(f: QfFormula, order: Sequence[str]) -> QfFormula:
    """Rename ``a[order[i]]`` to the tuple proposition ``a@{i+1}``."""
    index = {v: i + 1 for i, v in enumerate(order)}

    def go(g):
        if isinstance(g, Atom):
            if g.tv is None:
                return g
            if g.tv not in index:
                raise ValueError(f"trace variable {g.tv} missing from zip order")
            return Atom(f"{g.ap}@{index[g.tv]}")
        if isinstance(g, _UNARY):
            return type(g)(go(g.arg))
        if isinstance(g, _BINARY):
            return type(g)(go(g.left), go(g.right))
        return g

    return go(f)


def unzip_name(name: str) -> tuple[str, int]:
    base, _, idx = name.rpartition("@")
    if not base:
        raise ValueError(f"not a tuple proposition: {name!r}")
    return base, int(idx)


# ---------------------------------------------------------------------------
# Lassos and exact evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LassoTrace:
    """The ultimately periodic word ``stem . loop^omega`` over sets of propositions."""

    stem: tuple[frozenset, ...]
    loop: tuple[frozenset, ...]

    def __post_init__(self):
        object.__setattr__(self, "stem", tuple(frozenset(x) for x in self.stem))
        object.__setattr__(self, "loop", tuple(frozenset(x) for x in self.loop))
        if not self.loop:
            raise ValueError("lasso loop must be nonempty")

    def __getitem__(self, i: int) -> frozenset:
        if i < len(self.stem):
            return self.stem[i]
        return self.loop[(i - len(self.stem)) % len(self.loop)]

    def canonical(self) -> "LassoTrace":
        """Unique representation: primitive loop, shortest stem."""
        loop = list(self.loop)
        n = len(loop)
        for d in range(1, n + 1):
            if n % d == 0 and loop == loop[:d] * (n // d):
                loop = loop[:d]
                break
        stem = list(self.stem)
        while stem and stem[-1] == loop[-1]:
            stem.pop()
            loop = loop[-1:] + loop[:-1]
        return LassoTrace(tuple(stem), tuple(loop))

    def project(self, props: Iterable[str]) -> "LassoTrace":
        keep = frozenset(props)
        return LassoTrace(tuple(x & keep for x in self.stem),
                          tuple(x & keep for x in self.loop))

    def to_json(self) -> dict:
        return {"stem": [sorted(x) for x in self.stem],
                "loop": [sorted(x) for x in self.loop]}

    @classmethod
    def from_json(cls, d: Mapping) -> "LassoTrace":
        return cls(tuple(frozenset(x) for x in d["stem"]),
                   tuple(frozenset(x) for x in d["loop"]))


def _combine(assignment: Mapping[str | None, LassoTrace]) -> tuple[int, int]:
    stem = max(len(t.stem) for t in assignment.values())
    loop = 1
    for t in assignment.values():
        loop = loop * len(t.loop) // math.gcd(loop, len(t.loop))
    return stem, loop


def bounded_eval(f: QfFormula, assignment, position: int = 0) -> bool:
    """Decide ``assignment, position |= f`` exactly.

    ``assignment`` maps trace variables to lassos; a bare :class:`LassoTrace`
    is taken as the implicit trace of a zipped formula. The lassos are aligned
    on a common stem/period, giving a finite position graph on which every
    subformula is evaluated, with ``U`` as a least and ``R`` as a greatest
    fixpoint.
    """
    if isinstance(assignment, LassoTrace):
        assignment = {None: assignment}
    if not assignment:
        assignment = {None: LassoTrace((), (frozenset(),))}
    stem, loop = _combine(assignment)
    size = stem + loop
    succ = [i + 1 for i in range(size)]
    succ[-1] = stem

    def letter_has(ap, tv, i):
        if tv is None and None not in assignment:
            raise KeyError(f"no trace for atom {ap}")
        return ap in assignment[tv][i]

    values: dict[QfFormula, list[bool]] = {}
    for g in subformulas(f):
        if isinstance(g, Atom):
            v = [letter_has(g.ap, g.tv, i) for i in range(size)]
        elif isinstance(g, TrueF):
            v = [True] * size
        elif isinstance(g, FalseF):
            v = [False] * size
        elif isinstance(g, Not):
            v = [not x for x in values[g.arg]]
        elif isinstance(g, Next):
            a = values[g.arg]
            v = [a[succ[i]] for i in range(size)]
        elif isinstance(g, Eventually):
            v = _until_fix([True] * size, values[g.arg], succ)
        elif isinstance(g, Globally):
            v = _release_fix([False] * size, values[g.arg], succ)
        else:
            a, b = values[g.left], values[g.right]
            if isinstance(g, And):
                v = [x and y for x, y in zip(a, b)]
            elif isinstance(g, Or):
                v = [x or y for x, y in zip(a, b)]
            elif isinstance(g, Implies):
                v = [(not x) or y for x, y in zip(a, b)]
            elif isinstance(g, Iff):
                v = [x == y for x, y in zip(a, b)]
            elif isinstance(g, Until):
                v = _until_fix(a, b, succ)
            elif isinstance(g, Release):
                v = _release_fix(a, b, succ)
            elif isinstance(g, WeakUntil):
                glob = _release_fix([False] * size, a, succ)
                v = [x or y for x, y in zip(glob, _until_fix(a, b, succ))]
            else:
                raise TypeError(f"not a formula node: {g!r}")
        values[g] = v
    if position >= size:
        position = stem + (position - stem) % loop
    return values[f][position]


def _until_fix(a, b, succ):
    v = list(b)
    changed = True
    while changed:
        changed = False
        for i in range(len(v) - 1, -1, -1):
            if not v[i] and a[i] and v[succ[i]]:
                v[i] = True
                changed = True
    return v


def _release_fix(a, b, succ):
    v = list(b)
    changed = True
    while changed:
        changed = False
        for i in range(len(v) - 1, -1, -1):
            if v[i] and not a[i] and not v[succ[i]]:
                v[i] = False
                changed = True
    return v
