"""Grounding the bounded-synthesis constraint systems to quantifier-free SMT.

All four problem shapes share one run-graph schema: ``n`` universal copies
and ``m`` existential copies of a base system, a strategy of size ``X`` that
reads the universal inputs (or nothing) and writes the existential inputs,
optionally with a buffer of ``k`` lookahead letters, and a universal
co-Büchi automaton. The base system is either concrete or fully
uninterpreted (``tau``, ``lab`` become solver constants).

Vertices are tuples of small integers, numbered in mixed radix; the
annotation becomes one boolean ``lb_i`` and one integer ``ln_i`` per vertex.
Every universally quantified tuple of the constraint (vertex, next letter,
successor automaton state, and a value for each successor component that is
left open by uninterpreted functions) is expanded into one clause, so the
number of grounded tuples has a closed form (:func:`closed_form_count`).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from ..automata import UniversalCoBuchi
from ..hyperltl import Formula, Fragment, classify_prefix
from ..mc import copy_layout
from ..tsys import TransitionSystem, valuations

__all__ = ["SynthBounds", "ConstraintSystem", "ClauseCapError", "GIVEN",
           "encode_strategy_synthesis", "encode_lookahead_synthesis",
           "encode_exists_forall_synthesis", "encode_forall_exists_synthesis",
           "closed_form_count", "DEFAULT_CLAUSE_CAP"]

GIVEN = "given"
DEFAULT_CLAUSE_CAP = 10 ** 7


class ClauseCapError(RuntimeError):
    pass


@dataclass(frozen=True)
class SynthBounds:
    """Bounds on (system size, strategy size, lookahead).

    ``system_size`` is ``"given"`` when the system is fixed. The ``max_*``
    fields are only consulted by the bound-raising loop.
    """

    system_size: int | str = GIVEN
    strategy_size: int = 1
    lookahead: int = 0
    max_system: int | None = None
    max_strategy: int | None = None
    max_lookahead: int | None = None
    clause_cap: int = DEFAULT_CLAUSE_CAP

    def __post_init__(self):
        if self.strategy_size < 1:
            raise ValueError("strategy_size must be >= 1")
        if self.lookahead < 0:
            raise ValueError("lookahead must be >= 0")
        if self.system_size != GIVEN and (not isinstance(self.system_size, int)
                                          or self.system_size < 1):
            raise ValueError("system_size must be a positive integer or 'given'")

    @property
    def triple(self):
        return (self.system_size, self.strategy_size, self.lookahead)


@dataclass(frozen=True)
class _Base:
    """Base system of the copies: concrete (``sys``) or uninterpreted of ``size`` states."""

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    size: int
    sys: TransitionSystem | None = None

    @property
    def symbolic(self) -> bool:
        return self.sys is None

    @property
    def initial(self) -> int:
        return self.sys.states.index(self.sys.initial) if self.sys else 0


@dataclass(eq=False)
class ConstraintSystem:
    """A grounded constraint system ready for SMT-LIB emission.

    ``decls`` lists the uninterpreted constants (name, sort); ``ranges`` the
    finite-sort axioms ``0 <= c < hi``; ``initial`` and ``clauses`` the
    asserted formulas, ``ln_axioms`` bound the counter on annotated vertices.
    ``meta`` keeps everything the decoder needs.
    """

    sorts: dict[str, int]
    decls: list[tuple[str, str]]
    ranges: list[tuple[str, int]]
    num_vertices: int
    ln_bound: int
    initial: list[str]
    clauses: list[str]
    grounded: int
    ln_axioms: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def closed_form(self) -> int:
        return closed_form_count(self.sorts)


def closed_form_count(sorts: Mapping[str, int]) -> int:
    """Number of grounded tuples: vertex, next letter, successor automaton
    state and a value for every successor component not fixed by those."""
    s, n, m = sorts["S"], sorts["n"], sorts["m"]
    u, k, q, x = sorts["U"], sorts["k"], sorts["Q"], sorts["X"]
    split = (sorts.get("split_u", 1) ** n * sorts.get("split_e", 1) ** m
             * sorts.get("split_x", 1))
    return s ** n * s ** m * x * q * u ** k * u * q * split


# ---------------------------------------------------------------------------
# SMT term helpers (Python bools stand for constant terms)
# ---------------------------------------------------------------------------

def _and(terms):
    out = []
    for t in terms:
        if t is False:
            return False
        if t is not True:
            out.append(t)
    if not out:
        return True
    return out[0] if len(out) == 1 else "(and " + " ".join(out) + ")"


def _or(terms):
    out = []
    for t in terms:
        if t is True:
            return True
        if t is not False:
            out.append(t)
    if not out:
        return False
    return out[0] if len(out) == 1 else "(or " + " ".join(out) + ")"


def _lit(term, positive: bool):
    if isinstance(term, bool):
        return term if positive else not term
    return term if positive else f"(not {term})"


def _ite_tree(bits: Sequence, leaf) -> str:
    """Select ``leaf(mask)`` by the values of ``bits`` (bit i of mask = bits[i])."""

    def go(i: int, mask: int):
        if i == len(bits):
            return str(leaf(mask))
        hi = go(i + 1, mask | 1 << i)
        lo = go(i + 1, mask)
        if hi == lo:
            return hi
        b = bits[i]
        if b is True:
            return hi
        if b is False:
            return lo
        return f"(ite {b} {hi} {lo})"

    return go(0, 0)


# ---------------------------------------------------------------------------
# Core encoder
# ---------------------------------------------------------------------------

def _encode(aut: UniversalCoBuchi, base_u: _Base, base_e: _Base, n: int, m: int,
            apmap: Mapping[str, tuple], x_size: int, k: int, reads_universal: bool,
            clause_cap: int = DEFAULT_CLAUSE_CAP, prune: bool = True,
            meta: dict | None = None) -> ConstraintSystem:
    """Ground the constraint system.

    ``apmap`` sends every automaton proposition to ``(part, copy, kind, index)``
    with part in {"u", "e"} and kind in {"in", "out"}.
    """
    if k and not reads_universal:
        raise ValueError("lookahead needs a strategy that reads universal inputs")
    if base_u.size != base_e.size and n and m:
        raise ValueError("universal and existential copies must share the base system")
    missing = [a for a in aut.aps if a not in apmap]
    if missing:
        raise ValueError(f"no source for automaton propositions {missing}")

    ni_u, ni_e = len(base_u.inputs), len(base_e.inputs)
    n_ulet = 1 << (ni_u * n)           # universal letters
    n_read = n_ulet if reads_universal else 1
    n_write = ni_e * m
    size_s = base_u.size if n else base_e.size
    Q = aut.num_states
    sorts = {"S": size_s, "n": n, "m": m, "U": n_ulet, "k": k, "Q": Q, "X": x_size}
    sorts.update(split_u=base_u.size if base_u.symbolic else 1,
                 split_e=size_s if (base_e.symbolic or ni_e) else 1,
                 split_x=x_size if x_size > 1 else 1)
    predicted = closed_form_count(sorts)
    if predicted > clause_cap:
        raise ClauseCapError(f"{predicted} grounded clauses exceed the cap of {clause_cap}")
    grounded = 0
    vdom = size_s ** n * size_s ** m * x_size * Q * n_ulet ** k

    decls: list[tuple[str, str]] = []
    ranges: list[tuple[str, int]] = []

    def declare(name, sort, hi=None):
        decls.append((name, sort))
        if hi is not None:
            ranges.append((name, hi))
        return name

    # uninterpreted system parts
    def sys_tables(base: _Base, tag: str):
        if not base.symbolic:
            return None, None
        tau = {(s, u): declare(f"tau{tag}_{s}_{u}", "Int", base.size)
               for s in range(base.size) for u in range(1 << len(base.inputs))}
        lab = {(s, o): declare(f"lab{tag}_{s}_{o}", "Bool")
               for s in range(base.size) for o in range(len(base.outputs))}
        return tau, lab

    tau_u, lab_u = sys_tables(base_u, "")
    if base_e is base_u:
        tau_e, lab_e = tau_u, lab_u
    else:
        tau_e, lab_e = sys_tables(base_e, "e")

    # concrete transition tables as integer lookups
    def concrete(base: _Base):
        if base.symbolic:
            return None, None
        sys = base.sys
        st = list(sys.states)
        vals = valuations(sys.inputs)
        tr = {(i, u): st.index(sys.trans[(s, v)]) for i, s in enumerate(st)
              for u, v in enumerate(vals)}
        lb = {(i, o): (p in sys.label[s]) for i, s in enumerate(st)
              for o, p in enumerate(sys.outputs)}
        return tr, lb

    ctr_u, clab_u = concrete(base_u)
    ctr_e, clab_e = concrete(base_e)

    mu = {}
    out = {}
    for x in range(x_size):
        for r in range(n_read):
            mu[(x, r)] = declare(f"mu_{x}_{r}", "Int", x_size) if x_size > 1 else "0"
            for w in range(n_write):
                out[(x, r, w)] = declare(f"out_{x}_{r}_{w}", "Bool")
    init = {}
    if k:
        for key in range(n_read ** k):
            init[key] = declare(f"init_{key}", "Int", x_size) if x_size > 1 else "0"

    uni_mask = (1 << ni_u) - 1

    def u_bits(letter: int, j: int) -> int:
        return letter >> (j * ni_u) & uni_mask

    # pre-resolve automaton propositions
    ap_src = [apmap[a] for a in aut.aps]

    def valuation(su, se, x, r, now):
        vals = []
        for part, j, kind, idx in ap_src:
            if part == "u":
                if kind == "in":
                    vals.append(bool(u_bits(now, j) >> idx & 1))
                elif clab_u is not None:
                    vals.append(clab_u[(su[j], idx)])
                else:
                    vals.append(lab_u[(su[j], idx)])
            else:
                if kind == "in":
                    vals.append(out[(x, r, j * ni_e + idx)])
                elif clab_e is not None:
                    vals.append(clab_e[(se[j], idx)])
                else:
                    vals.append(lab_e[(se[j], idx)])
        return vals

    def guard(q, q2, vals):
        cubes = aut.guards.get((q, q2))
        if not cubes:
            return False
        return _or(_and(_lit(vals[i], pos) for i, pos in cube) for cube in cubes)

    def args(parts) -> str:
        return " ".join(str(p) for p in parts)

    dims = [size_s] * (n + m) + [x_size, Q] + [n_ulet] * k

    def vid(comps) -> int:
        i = 0
        for c_, d in zip(comps, dims):
            i = i * d + c_
        return i

    s0_u, s0_e = base_u.initial, base_e.initial
    initial = []
    for key in itertools.product(range(n_ulet), repeat=k):
        rk = 0
        for i, letter in enumerate(key):
            rk += letter * n_ulet ** i
        x0 = init[rk] if k else 0
        for x in range(x_size):
            if isinstance(x0, int) or x0 == "0":
                if x != int(x0):
                    continue
                initial.append(f"lb_{vid([s0_u] * n + [s0_e] * m + [x, aut.initial] + list(key))}")
            else:
                lb0 = vid([s0_u] * n + [s0_e] * m + [x, aut.initial] + list(key))
                initial.append(f"(=> (= {x0} {x}) lb_{lb0})")

    # successor values are quantified explicitly: one clause per value of
    # every successor component that is not fixed by the grounded tuple
    split_u = size_s if base_u.symbolic else 1
    split_e = size_s if (base_e.symbolic or ni_e) else 1
    split_x = x_size if x_size > 1 else 1

    def choices(term, dom: int):
        if dom == 1:
            # a one-element domain fixes the value; ranges make it 0
            yield (term if isinstance(term, int) else 0), True
            return
        for val in range(dom):
            if isinstance(term, int):
                yield val, val == term
            else:
                yield val, f"(= {term} {val})"

    clauses = []
    ranges_ln = []
    rejecting = aut.rejecting
    s_range = range(size_s)
    for su in itertools.product(s_range, repeat=n):
        for se in itertools.product(s_range, repeat=m):
            for x in range(x_size):
                for buf in itertools.product(range(n_ulet), repeat=k):
                    for q in range(Q):
                        i = vid(list(su) + list(se) + [x, q] + list(buf))
                        lbv, lnv = f"lb_{i}", f"ln_{i}"
                        ranges_ln.append(f"(=> {lbv} (and (<= 0 {lnv}) (<= {lnv} {vdom})))")
                        for new in range(n_ulet):
                            now = buf[0] if k else new
                            r = new if reads_universal else 0
                            vals = valuation(su, se, x, r, now)
                            opts = []
                            for j in range(n):
                                u = u_bits(now, j)
                                t = ctr_u[(su[j], u)] if ctr_u is not None else tau_u[(su[j], u)]
                                opts.append(list(choices(t, split_u)))
                            for j in range(m):
                                bits = [out[(x, r, j * ni_e + p)] for p in range(ni_e)]
                                table = ctr_e if ctr_e is not None else tau_e
                                t = _ite_tree(bits, lambda e, s=se[j]: table[(s, e)])
                                t = int(t) if t.isdigit() else t
                                opts.append(list(choices(t, split_e)))
                            t = mu[(x, r)]
                            opts.append(list(choices(0 if t == "0" else t, split_x)))
                            tail = list(buf[1:]) + [new] if k else []
                            guards = [guard(q, q2, vals) for q2 in range(Q)]
                            for combo in itertools.product(*opts):
                                cond = _and(c_ for _, c_ in combo)
                                nxt = [v_ for v_, _ in combo]
                                for q2 in range(Q):
                                    grounded += 1
                                    g = _and([guards[q2], cond])
                                    if g is False and prune:
                                        continue
                                    j2 = vid(nxt + [q2] + tail)
                                    rel = ">" if q2 in rejecting else ">="
                                    concl = f"(and lb_{j2} ({rel} {lnv} ln_{j2}))"
                                    if g is True:
                                        prem = lbv
                                    elif g is False:
                                        prem = f"(and {lbv} false)"
                                    else:
                                        prem = f"(and {lbv} {g})"
                                    clauses.append(f"(=> {prem} {concl})")
    meta = dict(meta or {})
    meta.update(n=n, m=m, k=k, x_size=x_size, n_read=n_read, n_write=n_write,
                n_ulet=n_ulet, reads_universal=reads_universal,
                base_u=base_u, base_e=base_e)
    return ConstraintSystem(sorts, decls, ranges, vdom, vdom, initial,
                            clauses, grounded, ranges_ln, meta)


# ---------------------------------------------------------------------------
# Problem-specific front ends
# ---------------------------------------------------------------------------

def _formula_apmap(f: Formula, inputs, outputs, aut: UniversalCoBuchi):
    uni, ex = copy_layout(f)
    apmap = {}
    for a in aut.aps:
        name, sep, idx = a.rpartition("@")
        if not sep:
            raise ValueError(f"automaton proposition {a!r} is not zipped")
        i = int(idx)
        part, j = ("u", uni.index(i)) if i in uni else ("e", ex.index(i))
        if name in inputs:
            apmap[a] = (part, j, "in", list(inputs).index(name))
        elif name in outputs:
            apmap[a] = (part, j, "out", list(outputs).index(name))
        else:
            raise ValueError(f"proposition {name!r} is neither an input nor an output")
    return apmap, uni, ex


def _encode_formula(f: Formula, aut: UniversalCoBuchi, base: _Base, b: SynthBounds,
                    reads_universal: bool, kind: str, **kw) -> ConstraintSystem:
    apmap, uni, ex = _formula_apmap(f, base.inputs, base.outputs, aut)
    x_size = b.strategy_size if ex else 1
    k = b.lookahead if (ex and reads_universal and uni) else 0
    if b.lookahead and not k:
        raise ValueError("lookahead only applies to forall-exists strategies")
    meta = {"kind": kind, "formula": f, "uni": uni, "ex": ex, "bounds": b}
    return _encode(aut, base, base, len(uni), len(ex), apmap, x_size, k,
                   reads_universal and bool(uni), b.clause_cap, meta=meta, **kw)


def encode_strategy_synthesis(sys: TransitionSystem, f: Formula, aut: UniversalCoBuchi,
                              b: SynthBounds, **kw) -> ConstraintSystem:
    """Strategy synthesis for a fixed system.

    Handles forall-exists formulas (the strategy reads the universal inputs,
    with ``b.lookahead`` letters of lookahead) and exists-forall formulas
    (input-free witness strategy).
    """
    if b.system_size != GIVEN:
        raise ValueError("strategy synthesis needs system_size = 'given'")
    frag = classify_prefix(f)
    if frag.kind not in (Fragment.FORALL_EXISTS, Fragment.EXISTS_FORALL):
        raise ValueError(f"strategy synthesis needs one quantifier alternation, got {frag}")
    base = _Base(sys.inputs, sys.outputs, len(sys.states), sys)
    return _encode_formula(f, aut, base, b, frag.kind is Fragment.FORALL_EXISTS,
                           "strategy", **kw)


def encode_lookahead_synthesis(aut: UniversalCoBuchi, k: int, b: SynthBounds,
                               inputs: Sequence[str], outputs: Sequence[str],
                               **kw) -> ConstraintSystem:
    """Synthesize a ``k``-lookahead system reading ``inputs`` and writing ``outputs``.

    Stand-alone form over a plain automaton. The system's first state is
    chosen from the first ``k`` inputs; afterwards its output for step i is
    a function of its state and input i+k. Encoded as a strategy between two
    one-state pass-through systems, so at ``k = 0`` the clauses coincide with
    those of ordinary strategy synthesis on a one-state system.
    """
    inputs, outputs = tuple(inputs), tuple(outputs)
    if set(inputs) & set(outputs):
        raise ValueError("inputs and outputs must be disjoint")
    wire_in = _Base(inputs, (), 1, _wire(inputs))
    wire_out = _Base(outputs, (), 1, _wire(outputs))
    apmap = {}
    for a in aut.aps:
        if a in inputs:
            apmap[a] = ("u", 0, "in", inputs.index(a))
        elif a in outputs:
            apmap[a] = ("e", 0, "in", outputs.index(a))
        else:
            raise ValueError(f"automaton proposition {a!r} is neither input nor output")
    meta = {"kind": "lookahead", "inputs": inputs, "outputs": outputs, "aut": aut,
            "bounds": replace(b, lookahead=k)}
    return _encode(aut, wire_in, wire_out, 1, 1, apmap, b.strategy_size, k, True,
                   b.clause_cap, meta=meta, **kw)


def _wire(props) -> TransitionSystem:
    return TransitionSystem(tuple(props), (), ("w",), "w",
                            {("w", v): "w" for v in valuations(props)}, {"w": frozenset()})


def encode_exists_forall_synthesis(f: Formula, aut: UniversalCoBuchi, b: SynthBounds,
                                   inputs: Sequence[str], outputs: Sequence[str],
                                   **kw) -> ConstraintSystem:
    """System and witness synthesis for ``exists^m forall^n``; the witness reads nothing."""
    frag = classify_prefix(f)
    if frag.kind not in (Fragment.EXISTS_FORALL, Fragment.EXISTENTIAL):
        raise ValueError(f"expected an exists-forall formula, got {frag}")
    if b.system_size == GIVEN:
        raise ValueError("system synthesis needs a finite system_size")
    base = _Base(tuple(inputs), tuple(outputs), b.system_size)
    return _encode_formula(f, aut, base, b, False, "system", **kw)


def encode_forall_exists_synthesis(f: Formula, aut: UniversalCoBuchi, b: SynthBounds,
                                   inputs: Sequence[str], outputs: Sequence[str],
                                   **kw) -> ConstraintSystem:
    """System and strategy synthesis for ``forall^n exists^m`` (``m = 0`` allowed)."""
    frag = classify_prefix(f)
    if frag.kind not in (Fragment.FORALL_EXISTS, Fragment.UNIVERSAL):
        raise ValueError(f"expected a forall-exists formula, got {frag}")
    if b.system_size == GIVEN:
        raise ValueError("system synthesis needs a finite system_size")
    base = _Base(tuple(inputs), tuple(outputs), b.system_size)
    return _encode_formula(f, aut, base, b, True, "system", **kw)
