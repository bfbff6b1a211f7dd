"""Machine documents: a versioned YAML description of a graph machine, its
input (or a family of inputs) and run options; plus the line format used
for traces.

Vertices are written as bracketed paths such as ``[3]``, ``[2,7]``,
``[*]`` or ``[star,-5]``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml

from .core import (Configuration, FiniteGraph, Guard, GraphMachine, GraphMachineError, Output,
                   Rule, sort_vertices, vkey as sort_key)

FORMAT = 1
ENGINES = ("finite", "finite_degree", "truncated")
_INT = re.compile(r"^-?\d+$")


class DocumentError(GraphMachineError):
    pass


def format_vertex(v: tuple) -> str:
    return "[" + ",".join(str(x) for x in v) + "]"


def parse_vertex(s: str) -> tuple:
    s = str(s).strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise DocumentError(f"vertex {s!r} is not a bracketed path")
    body = s[1:-1].strip()
    if not body:
        raise DocumentError("empty vertex path")
    out = []
    for part in body.split(","):
        part = part.strip()
        if not part:
            raise DocumentError(f"empty component in {s!r}")
        out.append(int(part) if _INT.match(part) else part)
    return tuple(out)


def _check_keys(d: Any, allowed, where: str) -> dict:
    if not isinstance(d, dict):
        raise DocumentError(f"{where} must be a mapping")
    extra = set(d) - set(allowed)
    if extra:
        raise DocumentError(f"unknown keys in {where}: {sorted(map(str, extra))}")
    return d


def _sorted(xs) -> list:
    return sorted(xs, key=lambda x: (not isinstance(x, int), str(x) if not isinstance(x, int) else x))


# ---------------------------------------------------------------------------
# rules

_RULE_KEYS = ("name", "label", "symbols", "states", "has", "lacks", "any_of", "emit", "symbol",
              "state", "relay", "catch_all")


def rule_to_dict(r: Rule) -> dict:
    g, o = r.guard, r.output
    d: dict = {"name": r.name}
    if g.label is not None:
        d["label"] = g.label
    if g.symbols is not None:
        d["symbols"] = _sorted(g.symbols)
    if g.states is not None:
        d["states"] = _sorted(g.states)
    for key in ("has", "lacks"):
        if getattr(g, key):
            d[key] = sorted(getattr(g, key))
    if g.any_of:
        d["any_of"] = [sorted(s) for s in g.any_of]
    if o.emit:
        d["emit"] = sorted(o.emit)
    if o.symbol is not None:
        d["symbol"] = o.symbol
    if o.state is not None:
        d["state"] = o.state
    if o.relay:
        d["relay"] = [[a, b] for a, b in o.relay]
    if r.catch_all:
        d["catch_all"] = True
    return d


def rule_from_dict(d: dict) -> Rule:
    _check_keys(d, _RULE_KEYS, f"rule {d.get('name', '?')!r}")

    def opt(key):
        return None if key not in d else frozenset(d[key])

    guard = Guard(d.get("label"), opt("symbols"), opt("states"), frozenset(d.get("has", ())),
                  frozenset(d.get("lacks", ())), tuple(frozenset(s) for s in d.get("any_of", ())))
    relay = None
    if d.get("relay"):
        relay = tuple((a, b) for a, b in d["relay"])
    out = Output(frozenset(d.get("emit", ())), d.get("symbol"), d.get("state"), relay)
    return Rule(guard, out, d.get("name", ""), bool(d.get("catch_all", False)))


# ---------------------------------------------------------------------------
# documents


@dataclass
class MachineDocument:
    machine: GraphMachine
    input: dict = field(default_factory=dict)
    inputs: Optional[list] = None
    options: dict = field(default_factory=dict)
    builtin: Optional[dict] = None  # {"name": ..., "params": {...}} for unlisted graphs

    @property
    def max_steps(self) -> Optional[int]:
        return self.options.get("max_steps")

    @property
    def engine(self) -> str:
        return self.options.get("engine") or ("finite" if self.machine.graph.finite
                                              else "finite_degree")

    def input_family(self) -> list:
        return list(self.inputs) if self.inputs is not None else [self.input]


_OPTION_KEYS = ("max_steps", "engine", "N", "window")


def _graph_to_dict(m: GraphMachine, builtin: Optional[dict]) -> dict:
    g = m.graph
    if not g.finite:
        if builtin is None:
            raise DocumentError("an infinite graph needs a builtin description")
        return {"kind": "builtin", "name": builtin["name"], "params": dict(builtin["params"])}
    vs = g.vertices()
    d = {
        "kind": "finite",
        "vertices": [format_vertex(v) for v in vs],
        "labels": {format_vertex(v): g.label(v) for v in vs},
        "gamma": {lab: sorted(cs) for lab, cs in sorted(g.gamma.items())},
        "edges": [[format_vertex(v), format_vertex(w), sorted(cs)]
                  for (v, w), cs in sorted(g.edges().items(),
                                           key=lambda e: (sort_key(e[0][0]), sort_key(e[0][1])))],
    }
    if g.degree_bound is not None:
        d["degree_bound"] = g.degree_bound
    return d


def _input_to_dict(x: dict) -> dict:
    return {format_vertex(v): z for v, z in
            sorted(x.items(), key=lambda kv: sort_key(kv[0])) if z != 0}


def to_dict(doc: MachineDocument) -> dict:
    m = doc.machine
    out: dict = {"format": FORMAT, "name": m.name}
    out["graph"] = _graph_to_dict(m, doc.builtin)
    out["machine"] = {
        "alphabet": list(m.alphabet),
        "states": _sorted(m.states),
        "initial": m.initial,
        "alpha": {lab: _sorted(ss) for lab, ss in sorted(m.alpha.items())},
        "rules": [rule_to_dict(r) for r in m.rules],
    }
    out["input"] = _input_to_dict(doc.input)
    if doc.inputs is not None:
        out["inputs"] = [_input_to_dict(x) for x in doc.inputs]
    if doc.options:
        out["options"] = {k: doc.options[k] for k in _OPTION_KEYS if k in doc.options}
    return out


def dumps(doc: MachineDocument) -> str:
    body = to_dict(doc)
    head = f"format: {body.pop('format')}\n"
    return head + yaml.safe_dump(body, sort_keys=False, default_flow_style=None, width=100)


def _parse_input(d) -> dict:
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise DocumentError("input must be a mapping from vertices to symbols")
    return {parse_vertex(k): int(v) for k, v in d.items()}


def from_dict(d: dict, builtin_graph=None) -> MachineDocument:
    """Build a document; ``builtin_graph(name, params)`` resolves builtin graphs."""
    _check_keys(d, ("format", "name", "graph", "machine", "input", "inputs", "options"), "document")
    if d.get("format") != FORMAT:
        raise DocumentError(f"unsupported format {d.get('format')!r}; expected {FORMAT}")
    gd = d.get("graph")
    if not isinstance(gd, dict):
        raise DocumentError("missing graph section")
    builtin = None
    if gd.get("kind") == "finite":
        _check_keys(gd, ("kind", "vertices", "labels", "gamma", "edges", "degree_bound"), "graph")
        vs = [parse_vertex(v) for v in gd.get("vertices", [])]
        labels = {parse_vertex(k): lab for k, lab in (gd.get("labels") or {}).items()}
        missing = [v for v in vs if v not in labels]
        if missing:
            raise DocumentError(f"vertex {format_vertex(missing[0])} has no label")
        edges = {}
        for e in gd.get("edges") or []:
            if not (isinstance(e, list) and len(e) == 3):
                raise DocumentError(f"edge {e!r} must be [source, target, colors]")
            edges[(parse_vertex(e[0]), parse_vertex(e[1]))] = frozenset(e[2])
        graph = FiniteGraph(vs, labels, gd.get("gamma") or {}, edges, gd.get("degree_bound"))
        for (v, w), cs in edges.items():
            for u in (v, w):
                if not cs <= graph.gamma.get(graph.label(u), frozenset()):
                    raise DocumentError(f"edge {format_vertex(v)}->{format_vertex(w)} uses "
                                        f"colors not allowed at {format_vertex(u)}")
    elif gd.get("kind") == "builtin":
        _check_keys(gd, ("kind", "name", "params"), "graph")
        if builtin_graph is None:
            raise DocumentError("builtin graphs are not available here")
        builtin = {"name": gd.get("name"), "params": dict(gd.get("params") or {})}
        graph = builtin_graph(builtin["name"], builtin["params"])
    else:
        raise DocumentError("graph.kind must be 'finite' or 'builtin'")
    md = _check_keys(d.get("machine"), ("alphabet", "states", "initial", "alpha", "rules"),
                     "machine")
    rules = [rule_from_dict(r) for r in md.get("rules") or []]
    try:
        m = GraphMachine(graph, md.get("alphabet", (0, 1)), md.get("states", ()), md.get("initial"),
                         md.get("alpha") or {}, rules, name=d.get("name", ""))
    except ValueError as exc:
        raise DocumentError(str(exc)) from None
    if m.initial not in m.states:
        raise DocumentError(f"initial state {m.initial!r} is not a state")
    for lab in graph.gamma:
        if m.initial not in m.alpha.get(lab, ()):
            raise DocumentError(f"initial state not allowed for label {lab!r}")
    opts = _check_keys(d.get("options") or {}, _OPTION_KEYS, "options")
    if "engine" in opts and opts["engine"] not in ENGINES:
        raise DocumentError(f"engine must be one of {ENGINES}")
    x = _parse_input(d.get("input"))
    xs = None if d.get("inputs") is None else [_parse_input(i) for i in d["inputs"]]
    for inp in [x] + (xs or []):
        for v, z in inp.items():
            if v not in graph:
                raise DocumentError(f"input vertex {format_vertex(v)} is not in the graph")
            if z not in m.alphabet:
                raise DocumentError(f"input symbol {z} at {format_vertex(v)} not in the alphabet")
    return MachineDocument(m, x, xs, dict(opts), builtin)


def loads(text: str, builtin_graph=None) -> MachineDocument:
    try:
        d = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise DocumentError(f"not valid YAML: {exc}") from None
    if not isinstance(d, dict):
        raise DocumentError("document must be a mapping")
    return from_dict(d, builtin_graph)


# ---------------------------------------------------------------------------
# trace records


def trace_record(stage: int, f: Configuration) -> str:
    """One line: the stage and its non-default cells in vertex order."""
    cells = [[format_vertex(v), sorted(emit), z, t]
             for v, (emit, z, t) in sorted(f.items(), key=lambda kv: sort_key(kv[0]))]
    return json.dumps({"stage": stage, "cells": cells}, separators=(",", ":"))


def parse_trace_record(line: str, initial) -> tuple:
    d = json.loads(line)
    cells = {parse_vertex(v): (frozenset(e), z, t) for v, e, z, t in d["cells"]}
    return d["stage"], Configuration(initial, cells)


__all__ = [
    "FORMAT", "DocumentError", "MachineDocument", "format_vertex", "parse_vertex", "rule_to_dict",
    "rule_from_dict", "dumps", "loads", "to_dict", "from_dict", "trace_record",
    "parse_trace_record",
]
