"""Bundled desk-scale instances: systems, formulas, strategies, prophecies."""

from __future__ import annotations

import json
from pathlib import Path

HERE = Path(__file__).resolve().parent


def path(name: str) -> Path:
    p = HERE / name
    if not p.exists():
        raise FileNotFoundError(f"no corpus entry {name!r}")
    return p


def names(suffix: str = "") -> list[str]:
    return sorted(p.name for p in HERE.iterdir() if p.is_file() and p.name.endswith(suffix)
                  and not p.name.startswith("_"))


def system(name: str):
    from ..tsys import TransitionSystem
    return TransitionSystem.load(path(name + ".json"))


def formula(name: str):
    from ..hyperltl import parse_formula
    return parse_formula(path(name + ".hltl").read_text(encoding="utf-8"))


def strategy(name: str, f):
    from ..mc import copy_layout
    from ..hyperltl import Fragment, classify_prefix
    from ..tsys import StrategySystem
    uni, ex = copy_layout(f)
    reads = uni if classify_prefix(f).kind is Fragment.FORALL_EXISTS else []
    return StrategySystem.from_json(json.loads(path(name + ".json").read_text()), reads, ex)


def prophecies(name: str):
    from ..hyperltl import parse_body
    from ..tsys import ProphecySpec
    data = json.loads(path(name + ".json").read_text())
    return [ProphecySpec(d["prop"], parse_body(d["guard"])) for d in data]


def signature(name: str):
    d = json.loads(path(name + ".json").read_text())
    return tuple(d["inputs"]), tuple(d["outputs"])
