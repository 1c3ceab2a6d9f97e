"""Büchi automata from LTL over a single (zipped) trace.

Letters are full valuations of the automaton's proposition list and are
encoded as bitmasks (bit i set iff ``aps[i]`` holds). Besides the explicit
per-letter successor table every automaton keeps, for each edge, the list of
literal cubes that enable it; the SMT encoder works from those.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .hyperltl import (And, Atom, FalseF, LassoTrace, Next, Not, Or, QfFormula,
                       Release, TrueF, Until, atoms, nnf, to_string)

__all__ = ["NondetBuchi", "UniversalCoBuchi", "AutomatonSizeError", "ltl_to_nba",
           "dualize_to_ucw", "nba_accepts_lasso", "ucw_accepts_lasso"]

DEFAULT_MAX_STATES = 1 << 16

Cube = tuple[tuple[int, bool], ...]


class AutomatonSizeError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class _Automaton:
    aps: tuple[str, ...]
    num_states: int
    initial: int
    delta: tuple[tuple[tuple[int, ...], ...], ...]  # delta[q][letter] -> successors
    marked: frozenset[int]
    guards: dict[tuple[int, int], tuple[Cube, ...]] = field(default_factory=dict)
    names: tuple[str, ...] = ()

    @property
    def states(self) -> range:
        return range(self.num_states)

    def letter(self, valuation: Iterable[str]) -> int:
        idx = self._index
        mask = 0
        for p in valuation:
            i = idx.get(p)
            if i is not None:
                mask |= 1 << i
        return mask

    @property
    def _index(self) -> dict[str, int]:
        cache = self.__dict__.get("_idx")
        if cache is None:
            cache = {p: i for i, p in enumerate(self.aps)}
            object.__setattr__(self, "_idx", cache)
        return cache

    def successors(self, q: int, valuation: Iterable[str]) -> tuple[int, ...]:
        return self.delta[q][self.letter(valuation)]

    def to_json(self) -> dict:
        edges = []
        for q in self.states:
            for letter, succ in enumerate(self.delta[q]):
                if succ:
                    edges.append({"from": q, "letter": [p for i, p in enumerate(self.aps)
                                                        if letter >> i & 1],
                                  "to": list(succ)})
        return {"aps": list(self.aps), "states": self.num_states, "initial": self.initial,
                "names": list(self.names), "edges": edges}


@dataclass(frozen=True, eq=False)
class NondetBuchi(_Automaton):
    """Nondeterministic Büchi automaton; ``marked`` is the accepting set."""

    @property
    def accepting(self) -> frozenset[int]:
        return self.marked

    def to_json(self) -> dict:
        d = super().to_json()
        d["kind"] = "nba"
        d["accepting"] = sorted(self.marked)
        return d


@dataclass(frozen=True, eq=False)
class UniversalCoBuchi(_Automaton):
    """Universal co-Büchi automaton; ``marked`` is the rejecting set."""

    @property
    def rejecting(self) -> frozenset[int]:
        return self.marked

    def to_json(self) -> dict:
        d = super().to_json()
        d["kind"] = "ucw"
        d["rejecting"] = sorted(self.marked)
        return d

    def dump(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)


# ---------------------------------------------------------------------------
# Tableau construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Cover:
    pos: frozenset
    neg: frozenset
    nxt: frozenset
    fulfilled: frozenset
    expanded: frozenset


def _flatten(fs: Iterable[QfFormula]) -> frozenset:
    out = set()
    stack = list(fs)
    while stack:
        f = stack.pop()
        if isinstance(f, And):
            stack += [f.left, f.right]
        elif not isinstance(f, TrueF):
            out.add(f)
    return frozenset(out)


def _expand(state: frozenset) -> list[_Cover]:
    covers: set[_Cover] = set()

    def go(todo, done, pos, neg, nxt, ful, exp):
        while todo:
            f = todo[0]
            todo = todo[1:]
            if f in done:
                continue
            done = done | {f}
            if isinstance(f, TrueF):
                continue
            if isinstance(f, FalseF):
                return
            if isinstance(f, Atom):
                if f.ap in neg:
                    return
                pos = pos | {f.ap}
            elif isinstance(f, Not):
                if not isinstance(f.arg, Atom):
                    raise ValueError("formula is not in negation normal form")
                if f.arg.ap in pos:
                    return
                neg = neg | {f.arg.ap}
            elif isinstance(f, And):
                todo = (f.left, f.right) + todo
            elif isinstance(f, Or):
                go((f.left,) + todo, done, pos, neg, nxt, ful, exp)
                todo = (f.right,) + todo
            elif isinstance(f, Next):
                nxt = nxt | {f.arg}
            elif isinstance(f, Until):
                exp = exp | {f}
                go((f.right,) + todo, done, pos, neg, nxt, ful | {f}, exp)
                todo = (f.left,) + todo
                nxt = nxt | {f}
            elif isinstance(f, Release):
                go((f.left, f.right) + todo, done, pos, neg, nxt, ful, exp)
                todo = (f.right,) + todo
                nxt = nxt | {f}
            else:
                raise ValueError(f"unsupported node in tableau: {type(f).__name__}")
        covers.add(_Cover(frozenset(pos), frozenset(neg), _flatten(nxt),
                          frozenset(ful), frozenset(exp)))

    go(tuple(sorted(state, key=to_string)), frozenset(), frozenset(), frozenset(),
       frozenset(), frozenset(), frozenset())
    return sorted(covers, key=lambda c: (sorted(c.pos), sorted(c.neg),
                                         sorted(map(to_string, c.nxt))))


def ltl_to_nba(f: QfFormula, aps: Sequence[str] | None = None,
               max_states: int = DEFAULT_MAX_STATES) -> NondetBuchi:
    """Nondeterministic Büchi automaton accepting exactly the words satisfying ``f``.

    States of the underlying generalized automaton are sets of obligations;
    acceptance sets track fulfilment of each ``U`` subformula and are removed
    by a counter (degeneralization). ``f`` must be zipped (no trace variables).
    """
    f = nnf(f)
    used = sorted({a.ap for a in atoms(f)})
    for a in atoms(f):
        if a.tv is not None:
            raise ValueError("automaton construction needs a zipped formula")
    aps = tuple(aps) if aps is not None else tuple(used)
    missing = set(used) - set(aps)
    if missing:
        raise ValueError(f"propositions {sorted(missing)} not in the alphabet")
    index = {p: i for i, p in enumerate(aps)}
    untils: list[QfFormula] = []

    init_set = _flatten([f])
    if any(isinstance(g, FalseF) for g in init_set):
        init_set = frozenset([f])
    expansions: dict[frozenset, list[_Cover]] = {}

    # discover the generalized states first to learn all Until obligations
    order = [init_set]
    seen = {init_set}
    i = 0
    while i < len(order):
        s = order[i]
        i += 1
        covers = expansions[s] = _expand(s)
        for c in covers:
            for u in c.expanded:
                if u not in untils:
                    untils.append(u)
            if c.nxt not in seen:
                if len(seen) >= max_states:
                    raise AutomatonSizeError(f"more than {max_states} tableau states")
                seen.add(c.nxt)
                order.append(c.nxt)
    untils.sort(key=to_string)
    k = len(untils)

    def accepts(c: _Cover, j: int) -> bool:
        u = untils[j]
        return u not in c.expanded or u in c.fulfilled

    ids: dict[tuple[frozenset, int], int] = {}
    names: list[str] = []
    queue = deque()

    def state_id(key):
        if key not in ids:
            if len(ids) >= max_states:
                raise AutomatonSizeError(f"more than {max_states} automaton states")
            ids[key] = len(ids)
            names.append("{" + ", ".join(sorted(map(to_string, key[0]))) + f"}}/{key[1]}")
            queue.append(key)
        return ids[key]

    state_id((init_set, 0))
    edges: dict[int, list[tuple[int, _Cover]]] = {}
    while queue:
        key = queue.popleft()
        s, j = key
        src = ids[key]
        out = edges.setdefault(src, [])
        for c in expansions[s]:
            jj = 0 if j == k else j
            while jj < k and accepts(c, jj):
                jj += 1
            out.append((state_id((c.nxt, jj)), c))

    nletters = 1 << len(aps)
    delta = []
    guards: dict[tuple[int, int], list[Cube]] = {}
    for q in range(len(ids)):
        row = [set() for _ in range(nletters)]
        for target, c in edges.get(q, []):
            pm = sum(1 << index[p] for p in c.pos)
            nm = sum(1 << index[p] for p in c.neg)
            for letter in range(nletters):
                if letter & pm == pm and not letter & nm:
                    row[letter].add(target)
            cube = tuple(sorted([(index[p], True) for p in c.pos] +
                                [(index[p], False) for p in c.neg]))
            lst = guards.setdefault((q, target), [])
            if cube not in lst:
                lst.append(cube)
        delta.append(tuple(tuple(sorted(x)) for x in row))
    # states without an infinite continuation never matter for acceptance;
    # unmarking them keeps e.g. the automaton of false free of accepting states
    live = set(range(len(ids)))
    changed = True
    while changed:
        changed = False
        for q in list(live):
            if not any(t in live for row in delta[q] for t in row):
                live.discard(q)
                changed = True
    accepting = frozenset(q for (s, j), q in ids.items() if j == k and q in live)
    return NondetBuchi(tuple(aps), len(ids), 0, tuple(delta), accepting,
                       {e: tuple(sorted(cs)) for e, cs in guards.items()}, tuple(names))


def dualize_to_ucw(a: NondetBuchi) -> UniversalCoBuchi:
    """Same carrier, read universally; accepting states become rejecting ones."""
    return UniversalCoBuchi(a.aps, a.num_states, a.initial, a.delta, a.marked,
                            dict(a.guards), a.names)


# ---------------------------------------------------------------------------
# Lasso membership
# ---------------------------------------------------------------------------

def _marked_cycle_reachable(aut: _Automaton, w: LassoTrace) -> bool:
    """Is some run on ``w`` visiting a marked state infinitely often?"""
    size = len(w.stem) + len(w.loop)
    letters = [aut.letter(w[i]) for i in range(size)]

    def succ(node):
        q, i = node
        j = i + 1 if i + 1 < size else len(w.stem)
        return [(t, j) for t in aut.delta[q][letters[i]]]

    start = (aut.initial, 0)
    reach = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for t in succ(v):
            if t not in reach:
                reach.add(t)
                stack.append(t)
    for v in sorted(reach):
        if v[0] not in aut.marked:
            continue
        seen = set()
        stack = list(succ(v))
        while stack:
            t = stack.pop()
            if t == v:
                return True
            if t not in seen:
                seen.add(t)
                stack.extend(succ(t))
    return False


def nba_accepts_lasso(a: NondetBuchi, w: LassoTrace) -> bool:
    return _marked_cycle_reachable(a, w)


def ucw_accepts_lasso(a: UniversalCoBuchi, w: LassoTrace) -> bool:
    """Every run visits rejecting states only finitely often."""
    return not _marked_cycle_reachable(a, w)
