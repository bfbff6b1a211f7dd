"""Ordinary Turing machines, cellular automata and parallel graph dynamical
systems as graph machines, and the symmetrization transform.

Every builder returns ``(machine, correspondence)``.  The correspondence
maps a stage of the graph-machine run back to a configuration of the
source model; source time ``t`` lives at stage ``factor * t + offset``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

from .core import (EMPTY, Configuration, FiniteGraph, Guard, GraphMachine, LazyGraph, Output,
                   Rule, UnsupportedDimension, catch_all, rule)


@dataclass
class Correspondence:
    vertex_map: Callable
    factor: int
    offset: int
    project: Callable[[Configuration], object]
    notes: str = ""

    def stage(self, t: int) -> int:
        return self.factor * t + self.offset


# ---------------------------------------------------------------------------
# Turing machines

MOVES = ("L", "R", "S")


@dataclass
class TmProgram:
    """One-sided tape Turing machine; a left move on cell 0 stays put."""

    states: Sequence[str]
    start: str
    halt: frozenset
    alphabet: Sequence[int]
    delta: Mapping  # (state, symbol) -> (state, symbol, move)
    blank: int = 0

    def __post_init__(self):
        self.halt = frozenset(self.halt)
        self.alphabet = tuple(sorted(set(self.alphabet) | {self.blank}))
        if self.blank != 0:
            raise ValueError("blank must be 0 (the graph machine's blank)")
        for q in self.states:
            if q in self.halt:
                continue
            for a in self.alphabet:
                if (q, a) not in self.delta:
                    raise ValueError(f"no transition for ({q}, {a})")
                q2, a2, mv = self.delta[(q, a)]
                if mv not in MOVES or q2 not in self.states or a2 not in self.alphabet:
                    raise ValueError(f"bad transition {(q, a)} -> {(q2, a2, mv)}")

    def initial(self, tape: Mapping[int, int]):
        return ({i: a for i, a in tape.items() if a != 0}, 0, self.start)

    def step(self, conf):
        tape, h, q = conf
        if q in self.halt:
            return conf
        q2, a2, mv = self.delta[(q, tape.get(h, 0))]
        tape = dict(tape)
        if a2:
            tape[h] = a2
        else:
            tape.pop(h, None)
        if mv == "R":
            h += 1
        elif mv == "L":
            h = max(h - 1, 0)
        return (tape, h, q2)

    def run(self, tape: Mapping[int, int], max_steps: int) -> list:
        confs = [self.initial(tape)]
        for _ in range(max_steps):
            if confs[-1][2] in self.halt:
                break
            confs.append(self.step(confs[-1]))
        return confs


def binary_increment() -> TmProgram:
    """Adds one to a binary number written on cells ``1..L`` with
    1 = bit 0 and 2 = bit 1 (most significant bit first).  Cell 0 is left
    blank so a carry out of the top bit has room."""
    d = {
        ("init", 0): ("right", 0, "R"), ("init", 1): ("right", 1, "R"),
        ("init", 2): ("right", 2, "R"),
        ("right", 1): ("right", 1, "R"), ("right", 2): ("right", 2, "R"),
        ("right", 0): ("carry", 0, "L"),
        ("carry", 2): ("carry", 1, "L"), ("carry", 1): ("done", 2, "S"),
        ("carry", 0): ("done", 2, "S"),
    }
    return TmProgram(("init", "right", "carry", "done"), "init", {"done"}, (0, 1, 2), d)


def unary_successor() -> TmProgram:
    """Appends a 1 after the first block of 1s starting at cell 0."""
    d = {("scan", 1): ("scan", 1, "R"), ("scan", 0): ("done", 1, "S")}
    return TmProgram(("scan", "done"), "scan", {"done"}, (0, 1), d)


def encode_binary(bits: str) -> dict:
    return {i + 1: (2 if b == "1" else 1) for i, b in enumerate(bits)}


def decode_binary(tape: Mapping[int, int]) -> str:
    cells = sorted(i for i, a in tape.items() if a)
    if not cells:
        return ""
    return "".join("1" if tape.get(i, 0) == 2 else "0" for i in range(cells[0], cells[-1] + 1))


ORIGIN = (-1,)
TM_HEAD = "H"


def _rc(q):
    return f"R:{q}"


def _lc(q):
    return f"L:{q}"


def _tm_rules(p: TmProgram) -> tuple:
    """Rules for the tape label.  States: ``s``/``z`` idle (``z`` marks cell
    0), ``h:q``/``hz:q`` head staying put, ``x:q``/``xz:q`` halted head."""
    rules = [
        rule("origin create head", label="origin", states="s", symbols=1, emit=[TM_HEAD], symbol=0),
        rule("origin idle", label="origin", states="s", symbol=0),
    ]
    states = {"s", "z"}
    for q in p.states:
        states.update({f"h:{q}", f"hz:{q}", f"x:{q}", f"xz:{q}"})

    def act(q, a, zero):
        """Cell output when the head in state q reads a here."""
        mark = "z" if zero else ""
        if q in p.halt:
            return dict(emit=[], symbol=a, state=f"x{mark}:{q}")
        q2, a2, mv = p.delta[(q, a)]
        if mv == "R":
            return dict(emit=[_rc(q2)], symbol=a2, state="z" if zero else "s")
        if mv == "L" and not zero:
            return dict(emit=[_lc(q2)], symbol=a2, state="s")
        nxt = f"x{mark}:{q2}" if q2 in p.halt else f"h{mark}:{q2}"
        return dict(emit=[], symbol=a2, state=nxt)

    for a in p.alphabet:
        rules.append(rule(f"create {a}", label="tape", has=[TM_HEAD], symbols=a,
                          **act(p.start, a, True)))
        for q in p.states:
            for zero in (False, True):
                idle = "z" if zero else "s"
                for color in (_rc(q), _lc(q)):
                    rules.append(rule(f"arrive {color} {a} {idle}", label="tape", has=[color],
                                      symbols=a, states=idle, **act(q, a, zero)))
                held = f"hz:{q}" if zero else f"h:{q}"
                if q not in p.halt:
                    rules.append(rule(f"hold {q} {a} {idle}", label="tape", states=held, symbols=a,
                                      **act(q, a, zero)))
    rules.append(rule("tape idle", label="tape", states=sorted(states)))
    rules.append(catch_all("tm default"))
    return rules, states


def embed_tm(p: TmProgram):
    """Tape ``{-1} ∪ N`` as a chain; ``-1`` displaying 1 creates the head
    above 0.  TM time ``t`` is stage ``t + 1``."""
    colors = {TM_HEAD} | {_rc(q) for q in p.states} | {_lc(q) for q in p.states}
    rights = frozenset(_rc(q) for q in p.states)
    lefts = frozenset(_lc(q) for q in p.states)

    def contains(v):
        return len(v) == 1 and isinstance(v[0], int) and v[0] >= -1

    def label(v):
        return "origin" if v == ORIGIN else "tape"

    def out_edges(v):
        i = v[0]
        if i == -1:
            return [((0,), {TM_HEAD})]
        out = [((i + 1,), rights)]
        if i > 0:
            out.append(((i - 1,), lefts))
        return out

    def in_edges(v):
        i = v[0]
        if i == -1:
            return []
        out = [((i + 1,), lefts)]
        out.append(((i - 1,), {TM_HEAD} if i == 0 else rights))
        return out

    g = LazyGraph(contains, label, {"origin": {TM_HEAD}, "tape": colors}, out_edges=out_edges,
                  in_edges=in_edges, exhaustion=lambda N: [ORIGIN] + [(i,) for i in range(N)],
                  degree_bound=2, name="tm-tape")
    rules, states = _tm_rules(p)
    m = GraphMachine(g, set(p.alphabet) | {0, 1}, states, "s",
                     {"origin": {"s"}, "tape": states}, rules, name="tm")

    def project(f: Configuration):
        tape = {v[0]: z for v, (_, z, _) in f.items() if v[0] >= 0 and z != 0}
        head = None
        for v, (emit, _, t) in f.items():
            i = v[0]
            for c in emit:
                if c == TM_HEAD:
                    head = (0, p.start)
                elif c.startswith("R:"):
                    head = (i + 1, c[2:])
                elif c.startswith("L:"):
                    head = (i - 1, c[2:])
            if ":" in t:
                head = (i, t.split(":", 1)[1])
        if head is None:
            return None
        return (tape, head[0], head[1])

    corr = Correspondence(lambda i: (i,), 1, 1, project,
                          "head travels as a pulse on a move and as a cell state otherwise")
    return m, corr


def tm_input(tape: Mapping[int, int]) -> dict:
    x = {(i,): a for i, a in tape.items() if a}
    x[ORIGIN] = 1
    return x


# ---------------------------------------------------------------------------
# cellular automata


@dataclass
class CaRule:
    """One-dimensional CA with ``k`` states ``0..k-1`` and radius ``r``.

    ``table`` maps neighborhoods ``(x_{-r}, ..., x_r)`` to the new state.
    """

    radius: int
    k: int
    table: Mapping
    dimension: int = 1

    def __post_init__(self):
        if self.dimension != 1:
            raise UnsupportedDimension(self.dimension)
        if self.table[(0,) * (2 * self.radius + 1)] != 0:
            raise ValueError("the all-quiescent neighborhood must map to 0")

    @classmethod
    def wolfram(cls, number: int) -> "CaRule":
        table = {}
        for nb in itertools.product((0, 1), repeat=3):
            table[nb] = (number >> (nb[0] * 4 + nb[1] * 2 + nb[2])) & 1
        return cls(1, 2, table)

    def step(self, cells: Mapping[int, int]) -> dict:
        r = self.radius
        todo = {i + d for i in cells for d in range(-r, r + 1)}
        out = {}
        for i in todo:
            nb = tuple(cells.get(i + d, 0) for d in range(-r, r + 1))
            z = self.table[nb]
            if z:
                out[i] = z
        return out


def _cc(d: int, q: int) -> str:
    return f"n{d:+d}={q}"


def embed_ca(ca: CaRule, window: int = 64):
    """Cells of ``Z`` as vertices; the edge ``i+d -> i`` carries ``n{d}=q``
    meaning the neighbour at offset ``d`` is in state ``q``.  CA time ``t``
    is stage ``t + 1``: stage 1 only announces the initial states."""
    r = ca.radius
    offs = [d for d in range(-r, r + 1) if d != 0]
    nz = range(1, ca.k)
    colors = {_cc(d, q) for d in offs for q in nz}

    def out_edges(v):
        i = v[0]
        return [((i - d,), {_cc(d, q) for q in nz}) for d in offs]

    def in_edges(v):
        i = v[0]
        return [((i + d,), {_cc(d, q) for q in nz}) for d in offs]

    g = LazyGraph(lambda v: len(v) == 1 and isinstance(v[0], int), lambda v: "cell",
                  {"cell": colors}, out_edges=out_edges, in_edges=in_edges,
                  exhaustion=lambda N: [(i,) for i in range(-N, N + 1)], degree_bound=2 * r,
                  name=f"ca(r={r},k={ca.k})")

    def announce(z):
        return [_cc(d, z) for d in offs] if z else []

    rules = [rule("quiet", label="cell", states="s", symbols=0, lacks=colors)]
    for z in nz:
        rules.append(rule(f"announce {z}", label="cell", states="s", symbols=z, lacks=colors,
                          emit=announce(z), state="r"))
    for nb in itertools.product(range(ca.k), repeat=2 * r + 1):
        z = nb[r]
        has, lacks = [], []
        for j, d in enumerate(range(-r, r + 1)):
            if d == 0:
                continue
            for q in nz:
                (has if nb[j] == q else lacks).append(_cc(d, q))
        z2 = ca.table[nb]
        rules.append(rule(f"update {nb}", label="cell", symbols=z, has=has, lacks=lacks,
                          emit=announce(z2), symbol=z2, state="r" if z2 else "s"))
    rules.append(catch_all("ca default"))
    m = GraphMachine(g, set(range(ca.k)) | {0, 1}, {"s", "r"}, "s", {"cell": {"s", "r"}}, rules,
                     name="ca")
    lo = -(window // 2)
    win = range(lo, lo + window)

    def project(f: Configuration):
        return tuple(f.symbol((i,)) for i in win)

    return m, Correspondence(lambda i: (i,), 1, 1, project,
                             f"window {lo}..{lo + window - 1}; stage 1 announces time 0")


# ---------------------------------------------------------------------------
# parallel graph dynamical systems


@dataclass
class PgdsSystem:
    """Finite system: vertex ``v`` has ``k[v]`` states and is updated by
    ``update[v](own, tuple of in-neighbour states in the order of
    in_neighbors[v])``."""

    vertices: Sequence
    in_neighbors: Mapping
    k: Mapping
    update: Mapping

    def step(self, x: Mapping) -> dict:
        return {v: self.update[v](x[v], tuple(x[u] for u in self.in_neighbors[v]))
                for v in self.vertices}

    def run(self, x: Mapping, steps: int) -> list:
        out = [dict(x)]
        for _ in range(steps):
            out.append(self.step(out[-1]))
        return out


def random_boolean_network(n: int, rng, max_in: int = 3) -> PgdsSystem:
    vs = list(range(n))
    ins, upd = {}, {}
    for v in vs:
        ins[v] = tuple(rng.sample(vs, rng.randint(0, min(max_in, n))))
        table = {key: rng.randint(0, 1) for key in itertools.product((0, 1), repeat=len(ins[v]) + 1)}
        upd[v] = (lambda tb: (lambda own, nb: tb[(own,) + nb]))(table)
    return PgdsSystem(vs, ins, {v: 2 for v in vs}, upd)


def _pc(v, q) -> str:
    return f"c:{v}:{q}"


def embed_pgds(sys: PgdsSystem):
    """One vertex per system vertex with its own label and colors
    ``c:v:q``.  State ``q`` is displayed as ``q + 1`` so every vertex takes
    part from the start.  System time ``t`` is stage ``t + 1``."""
    vid = {v: (i,) for i, v in enumerate(sys.vertices)}
    labels, gamma, edges = {}, {}, {}
    for v in sys.vertices:
        lab = f"v{vid[v][0]}"
        labels[vid[v]] = lab
        own = {_pc(v, q) for q in range(sys.k[v])}
        got = set()
        for u in sys.in_neighbors[v]:
            cs = {_pc(u, q) for q in range(sys.k[u])}
            got |= cs
            edges[(vid[u], vid[v])] = edges.get((vid[u], vid[v]), set()) | cs
        gamma[lab] = own | got
    g = FiniteGraph(vid.values(), labels, gamma, edges)
    rules = []
    for v in sys.vertices:
        lab = labels[vid[v]]
        ins = list(sys.in_neighbors[v])
        rules.append(rule(f"{lab} quiet", label=lab, states="s", symbols=0, lacks=gamma[lab]))
        for q in range(sys.k[v]):
            rules.append(rule(f"{lab} announce {q}", label=lab, states="s", symbols=q + 1,
                              lacks=gamma[lab] - {_pc(v, x) for x in range(sys.k[v])},
                              emit=[_pc(v, q)], state="r"))
        # distinct in-neighbours; repeated entries read the same pulse
        uniq = list(dict.fromkeys(ins))
        for combo in itertools.product(*[range(sys.k[u]) for u in uniq]):
            st = dict(zip(uniq, combo))
            has = [_pc(u, st[u]) for u in uniq]
            lacks = [_pc(u, q) for u in uniq for q in range(sys.k[u]) if q != st[u]]
            for q in range(sys.k[v]):
                q2 = sys.update[v](q, tuple(st[u] for u in ins))
                rules.append(rule(f"{lab} update {q} {combo}", label=lab, states="r",
                                  symbols=q + 1, has=has, lacks=lacks, emit=[_pc(v, q2)],
                                  symbol=q2 + 1, state="r"))
    rules.append(catch_all("pgds default"))
    alphabet = set(range(max(sys.k.values()) + 1)) | {0, 1}
    m = GraphMachine(g, alphabet, {"s", "r"}, "s", {lab: {"s", "r"} for lab in gamma}, rules,
                     name="pgds")

    def project(f: Configuration):
        return {v: f.symbol(vid[v]) - 1 for v in sys.vertices}

    return m, Correspondence(vid.__getitem__, 1, 1, project, "display = state + 1")


def pgds_input(sys: PgdsSystem, x: Mapping) -> dict:
    return {(i,): x[v] + 1 for i, v in enumerate(sys.vertices)}


# ---------------------------------------------------------------------------
# symmetrization

RELAY, RELAY_STAR = "~e", "~e*"
ECHO = "m"


def tag(c: str) -> str:
    return c + "'"


def untag(c: str) -> str:
    return c[:-1]


def _phase(t, ph) -> str:
    return f"{t}|{ph}"


def relay_vertex(v, w, starred: bool = False) -> tuple:
    return ("e*" if starred else "e",) + tuple(v) + ("->",) + tuple(w)


def split_relay(x):
    """``(v, w, starred)`` for a relay vertex, else ``None``."""
    if not x or x[0] not in ("e", "e*") or "->" not in x:
        return None
    i = x.index("->")
    return tuple(x[1:i]), tuple(x[i + 1:]), x[0] == "e*"


def _sym_rules(m: GraphMachine, colors: frozenset) -> list:
    tagged = frozenset(tag(c) for c in colors)
    labels = sorted(m.graph.labels())
    rules = []
    # phase 0 with no relayed pulses: stay idle when the original cell is a
    # fixed point without input, otherwise start a three-stage cycle
    for lab in labels:
        for t in sorted(m.alpha.get(lab, ())):
            for z in m.alphabet:
                cell, _ = m.lookup(lab, EMPTY, z, t)
                idle = cell == (EMPTY, z, t)
                rules.append(rule(f"{lab} {t} {z} {'idle' if idle else 'tick'}", label=lab,
                                  states=_phase(t, 0), symbols=z, lacks=tagged,
                                  state=_phase(t, 0 if idle else 1)))
    for t in sorted(m.states):
        rules.append(rule(f"{t} wait", states=_phase(t, 1), lacks=tagged, state=_phase(t, 2)))
    # apply the original table to the relayed pulses
    for r in m.rules:
        gd = r.guard
        base = dict(label=gd.label, symbols=gd.symbols, has=frozenset(tag(c) for c in gd.has),
                    lacks=frozenset(tag(c) for c in gd.lacks),
                    any_of=tuple(frozenset(tag(c) for c in s) for s in gd.any_of))
        relay = None
        if r.output.relay:
            relay = tuple((tag(a), b) for a, b in r.output.relay)
        ts = sorted(gd.states if gd.states is not None else m.states)
        groups = [(ts, r.output.state)] if r.output.state is not None else [([t], t) for t in ts]
        for src, dst in groups:
            for ph, extra in ((2, ()), (0, (tagged,))):
                g = Guard(base["label"], base["symbols"],
                          frozenset(_phase(t, ph) for t in src), base["has"], base["lacks"],
                          base["any_of"] + tuple(frozenset(s) for s in extra))
                out = Output(r.output.emit, r.output.symbol, _phase(dst, 0), relay)
                rules.append(Rule(g, out, f"S[{ph}] {r.name}", r.catch_all))
    # relays
    q0 = _phase(m.initial, 0)
    rules.append(rule("e quiet", label=RELAY, lacks=colors, symbol=0, state=q0))
    rules.append(rule("e relay", label=RELAY, relay=[(c, c) for c in sorted(colors)], symbol=0,
                      state=q0))
    rules.append(rule("e* quiet", label=RELAY_STAR, states=q0, lacks=colors, symbol=0))
    rules.append(rule("e* first", label=RELAY_STAR, states=q0, symbol=0, state=ECHO))
    rules.append(rule("e* lapse", label=RELAY_STAR, states=ECHO, lacks=colors, symbol=0, state=q0))
    rules.append(rule("e* forward", label=RELAY_STAR, states=ECHO,
                      relay=[(c, tag(c)) for c in sorted(colors)], symbol=0, state=q0))
    rules.append(catch_all("symmetrize default"))
    return rules


def symmetrize(m: GraphMachine):
    """Symmetric-graph machine simulating ``m`` at one step per three stages.

    For each ``(v, w)`` with ``E(v, w)`` nonempty two relay vertices are
    added: ``e`` echoes what ``v`` sends and ``e*`` forwards a pulse to ``w``
    only when it arrives in two successive stages.  ``e*`` talks to ``w`` in
    primed copies of the colors so that ``w`` cannot confuse relayed pulses
    with echoes of its own.
    """
    g = m.graph
    colors = frozenset(set().union(*g.gamma.values())) if g.gamma else frozenset()
    tg = {c: tag(c) for c in colors}
    gamma = {lab: frozenset(cs) | {tg[c] for c in cs} for lab, cs in g.gamma.items()}
    gamma[RELAY] = colors
    gamma[RELAY_STAR] = colors | frozenset(tg.values())
    states = {_phase(t, ph) for t in m.states for ph in range(3)} | {ECHO}
    alpha = {lab: {_phase(t, ph) for t in ss for ph in range(3)} for lab, ss in m.alpha.items()}
    q0 = _phase(m.initial, 0)
    alpha[RELAY] = {q0}
    alpha[RELAY_STAR] = {q0, ECHO}

    def sym_edges(x):
        merged: dict = {}
        for y, cs in _sym_edges(x):
            merged[y] = merged.get(y, frozenset()) | cs
        return list(merged.items())

    def _sym_edges(x):
        rel = split_relay(x)
        if rel is None:
            out = []
            for w, cs in g.out_edges(x):
                out.append((relay_vertex(x, w), cs))
                out.append((relay_vertex(x, w, True), cs))
            for u, cs in g.in_edges(x):
                out.append((relay_vertex(u, x, True), frozenset(tg[c] for c in cs)))
            return out
        v, w, starred = rel
        cs = g.edge(v, w)
        if not starred:
            return [(v, cs), (relay_vertex(v, w, True), cs)]
        return [(v, cs), (relay_vertex(v, w), cs), (w, frozenset(tg[c] for c in cs))]

    def label(x):
        rel = split_relay(x)
        if rel is None:
            return g.label(x)
        return RELAY_STAR if rel[2] else RELAY

    if g.finite:
        vs = list(g.vertices())
        for (v, w) in g.edges():
            vs += [relay_vertex(v, w), relay_vertex(v, w, True)]
        edges = {}
        for x in vs:
            for y, cs in sym_edges(x):
                edges[(x, y)] = cs
        db = None if g.degree_bound is None else 2 * g.degree_bound
        graph = FiniteGraph(vs, {x: label(x) for x in vs}, gamma, edges)
        graph.degree_bound = db
    else:
        def contains(x):
            rel = split_relay(x)
            if rel is None:
                return x in g
            v, w, _ = rel
            return v in g and w in g and bool(g.edge(v, w))

        exh = None
        if g.has_exhaustion:
            def exh(N):
                B = g.exhaustion(N)
                out = set(B)
                for v in B:
                    for w, _ in g.out_edges(v):
                        if w in B:
                            out.add(relay_vertex(v, w))
                            out.add(relay_vertex(v, w, True))
                return out
        graph = LazyGraph(contains, label, gamma, out_edges=sym_edges, in_edges=sym_edges,
                          exhaustion=exh, name="symmetrized")
    sm = GraphMachine(graph, m.alphabet, states, q0, alpha, _sym_rules(m, colors),
                      name=f"sym({m.name})")

    def project(f: Configuration):
        cells = {}
        for x, (emit, z, t) in f.items():
            if split_relay(x) is None:
                cells[x] = (emit, z, t.rsplit("|", 1)[0])
        return Configuration(m.initial, cells)

    return sm, Correspondence(lambda v: v, 3, 0, project, "three stages per original step")


def is_symmetric(g, vertices=None) -> bool:
    vs = list(g.vertices() if vertices is None else vertices)
    for x in vs:
        for y, cs in g.out_edges(x):
            if g.edge(y, x) != cs:
                return False
        for y, cs in g.in_edges(x):
            if g.edge(x, y) != cs:
                return False
    return True


__all__ = [
    "Correspondence", "TmProgram", "binary_increment", "unary_successor", "encode_binary",
    "decode_binary", "embed_tm", "tm_input", "ORIGIN", "CaRule", "embed_ca", "PgdsSystem",
    "random_boolean_network", "embed_pgds", "pgds_input", "symmetrize", "relay_vertex",
    "split_relay", "is_symmetric", "tag", "untag",
]
