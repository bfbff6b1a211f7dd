"""Graph machines: colored graphs, lookup tables, configurations and the
synchronous step.

Vertices are tuples whose entries are ints or strings, e.g. ``(3,)``,
``(2, 7)``, ``("*",)`` or ``("star", -5)``.  Colors, labels and states are
strings; displayed symbols are ints with ``0`` as the blank.

A configuration maps every vertex to a cell ``(emitted, symbol, state)``.
The first coordinate holds the colors a vertex is *emitting* at the current
stage; what a vertex *receives* is computed during :func:`step` as the union
of ``E(w, v) & emitted(w)`` over all ``w``.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Optional

Vertex = tuple
Color = str
Label = str
State = str
Symbol = int
Cell = tuple  # (frozenset[Color], Symbol, State)

EMPTY: frozenset = frozenset()


class GraphMachineError(Exception):
    """Base class for errors raised by this package."""


class UnknownVertex(GraphMachineError, KeyError):
    pass


class NonEnumerableFrontier(GraphMachineError):
    """An operation needed the neighbors of a vertex whose neighborhood
    cannot be enumerated (infinite degree)."""


class SupportOutsideTruncation(GraphMachineError):
    pass


class DisconnectedSupport(GraphMachineError):
    pass


class MismatchedTables(GraphMachineError):
    pass


class DisallowedColor(GraphMachineError):
    pass


class UnsupportedDimension(GraphMachineError):
    pass


def vkey(v: Vertex) -> tuple:
    """Sort key giving a total order on vertices (ints before strings)."""
    return tuple((0, x, "") if isinstance(x, int) else (1, 0, str(x)) for x in v)


def sort_vertices(vs: Iterable[Vertex]) -> list:
    return sorted(vs, key=vkey)


# ---------------------------------------------------------------------------
# graphs


class Graph:
    """A colored graph ``(G, (L, V), (C, E), gamma)``.

    Subclasses supply membership, labels, the edge coloring and (when the
    degree is finite) neighbor enumeration.
    """

    gamma: Mapping[Label, frozenset]
    degree_bound: Optional[int] = None
    finite: bool = False

    def __contains__(self, v) -> bool:
        raise NotImplementedError

    def label(self, v: Vertex) -> Label:
        raise NotImplementedError

    def edge(self, v: Vertex, w: Vertex) -> frozenset:
        raise NotImplementedError

    def out_edges(self, v: Vertex) -> Iterable[tuple]:
        """Pairs ``(w, colors)`` with ``E(v, w) = colors`` nonempty."""
        raise NonEnumerableFrontier(v)

    def in_edges(self, v: Vertex) -> Iterable[tuple]:
        """Pairs ``(w, colors)`` with ``E(w, v) = colors`` nonempty."""
        raise NonEnumerableFrontier(v)

    def vertices(self) -> tuple:
        raise GraphMachineError("vertex set of an infinite graph cannot be listed")

    def exhaustion(self, n: int) -> Optional[frozenset]:
        """The n-th set of a monotone exhaustion of the domain, if declared."""
        return None

    @property
    def has_exhaustion(self) -> bool:
        return False

    def labels(self) -> frozenset:
        return frozenset(self.gamma)

    def neighbors(self, v: Vertex) -> set:
        """Vertices incident with ``v`` in either direction."""
        out = {w for w, _ in self.out_edges(v)}
        out.update(w for w, _ in self.in_edges(v))
        return out

    def degree(self, v: Vertex) -> int:
        return len(self.neighbors(v))


class FiniteGraph(Graph):
    """Explicit finite colored graph."""

    finite = True

    def __init__(self, vertices, labels: Mapping, gamma: Mapping, edges: Mapping,
                 degree_bound: Optional[int] = None):
        self._vertices = tuple(sort_vertices(set(vertices)))
        self._vset = frozenset(self._vertices)
        self._labels = {v: labels[v] for v in self._vertices}
        self.gamma = {lab: frozenset(cs) for lab, cs in gamma.items()}
        self._edges: dict = {}
        self._out: dict = {v: {} for v in self._vertices}
        self._in: dict = {v: {} for v in self._vertices}
        for (v, w), cs in edges.items():
            cs = frozenset(cs)
            if not cs:
                continue
            if v not in self._vset or w not in self._vset:
                raise UnknownVertex((v, w))
            self._edges[(v, w)] = cs
            self._out[v][w] = cs
            self._in[w][v] = cs
        self.degree_bound = degree_bound

    def __contains__(self, v) -> bool:
        return v in self._vset

    def __len__(self) -> int:
        return len(self._vertices)

    def vertices(self) -> tuple:
        return self._vertices

    def label(self, v):
        try:
            return self._labels[v]
        except KeyError:
            raise UnknownVertex(v) from None

    def edge(self, v, w) -> frozenset:
        return self._edges.get((v, w), EMPTY)

    def edges(self) -> dict:
        return dict(self._edges)

    def out_edges(self, v):
        try:
            return self._out[v].items()
        except KeyError:
            raise UnknownVertex(v) from None

    def in_edges(self, v):
        try:
            return self._in[v].items()
        except KeyError:
            raise UnknownVertex(v) from None

    def exhaustion(self, n: int) -> frozenset:
        return self._vset

    @property
    def has_exhaustion(self) -> bool:
        return True

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteGraph):
            return NotImplemented
        return (self._vertices == other._vertices and self._labels == other._labels
                and self.gamma == other.gamma and self._edges == other._edges)

    __hash__ = None  # type: ignore[assignment]


class LazyGraph(Graph):
    """Graph on a possibly infinite domain given by callables.

    ``out_edges``/``in_edges`` may be ``None`` when the neighborhoods are not
    enumerable; ``edge`` then must be supplied.  ``exhaustion(n)`` returns
    a finite set and must be monotone in ``n``.
    """

    def __init__(self, contains: Callable, label: Callable, gamma: Mapping,
                 out_edges: Optional[Callable] = None, in_edges: Optional[Callable] = None,
                 edge: Optional[Callable] = None, exhaustion: Optional[Callable] = None,
                 degree_bound: Optional[int] = None, name: str = ""):
        if edge is None and out_edges is None:
            raise ValueError("need either edge() or out_edges()")
        self._contains = contains
        self._label = label
        self.gamma = {lab: frozenset(cs) for lab, cs in gamma.items()}
        self._out = out_edges
        self._inn = in_edges
        self._edge = edge
        self._exh = exhaustion
        self.degree_bound = degree_bound
        self.name = name

    def __contains__(self, v) -> bool:
        return isinstance(v, tuple) and bool(self._contains(v))

    def label(self, v):
        if v not in self:
            raise UnknownVertex(v)
        return self._label(v)

    def edge(self, v, w) -> frozenset:
        if self._edge is not None:
            return frozenset(self._edge(v, w))
        for u, cs in self._out(v):
            if u == w:
                return frozenset(cs)
        return EMPTY

    def out_edges(self, v):
        if self._out is None:
            raise NonEnumerableFrontier(v)
        return [(w, frozenset(cs)) for w, cs in self._out(v) if cs]

    def in_edges(self, v):
        if self._inn is None:
            raise NonEnumerableFrontier(v)
        return [(w, frozenset(cs)) for w, cs in self._inn(v) if cs]

    def exhaustion(self, n: int):
        if self._exh is None:
            return None
        return frozenset(self._exh(n))

    @property
    def has_exhaustion(self) -> bool:
        return self._exh is not None


def restrict_graph(g: Graph, A: Iterable[Vertex]) -> FiniteGraph:
    """``g|_A`` as an explicit finite graph."""
    A = frozenset(A)
    for v in A:
        if v not in g:
            raise UnknownVertex(v)
    labels = {v: g.label(v) for v in A}
    edges = {}
    try:
        for v in A:
            for w, cs in g.out_edges(v):
                if w in A:
                    edges[(v, w)] = cs
    except NonEnumerableFrontier:
        edges = {}
        for v in A:
            for w in A:
                cs = g.edge(v, w)
                if cs:
                    edges[(v, w)] = cs
    return FiniteGraph(A, labels, g.gamma, edges)


# ---------------------------------------------------------------------------
# lookup tables


@dataclass(frozen=True)
class Guard:
    """Pattern on ``(label, received, symbol, state)``.

    ``None`` fields match anything.  ``has`` colors must all be received,
    ``lacks`` colors must all be absent, and every set in ``any_of`` must
    meet the received set.
    """

    label: Optional[Label] = None
    symbols: Optional[frozenset] = None
    states: Optional[frozenset] = None
    has: frozenset = EMPTY
    lacks: frozenset = EMPTY
    any_of: tuple = ()

    def matches(self, label, received: frozenset, z, t) -> bool:
        if self.label is not None and label != self.label:
            return False
        if self.symbols is not None and z not in self.symbols:
            return False
        if self.states is not None and t not in self.states:
            return False
        if not self.has <= received or self.lacks & received:
            return False
        return all(received & s for s in self.any_of)

    def conjoin(self, other: "Guard") -> "Guard":
        def meet(a, b):
            if a is None:
                return b
            if b is None:
                return a
            return a & b
        if self.label is not None and other.label is not None and self.label != other.label:
            lab = "\x00never"
        else:
            lab = self.label if self.label is not None else other.label
        return Guard(lab, meet(self.symbols, other.symbols), meet(self.states, other.states),
                     self.has | other.has, self.lacks | other.lacks, self.any_of + other.any_of)


@dataclass(frozen=True)
class Output:
    """Result of a rule: emitted colors, displayed symbol, next state.

    ``relay`` maps received colors to emitted ones (a pass-through);
    ``symbol``/``state`` of ``None`` keep the current value.
    """

    emit: frozenset = EMPTY
    symbol: Optional[Symbol] = None
    state: Optional[State] = None
    relay: Optional[tuple] = None  # tuple of (received color, emitted color)

    def apply(self, received: frozenset, z, t) -> Cell:
        emit = self.emit
        if self.relay:
            emit = emit | frozenset(dst for src, dst in self.relay if src in received)
        return (emit, z if self.symbol is None else self.symbol,
                t if self.state is None else self.state)


@dataclass(frozen=True)
class Rule:
    guard: Guard
    output: Output
    name: str = ""
    catch_all: bool = False


def rule(name="", *, label=None, symbols=None, states=None, has=(), lacks=(), any_of=(),
         emit=(), symbol=None, state=None, relay=None, catch_all=False) -> Rule:
    """Shorthand constructor used by the builders."""
    def fs(x):
        return None if x is None else frozenset([x] if isinstance(x, (str, int)) else x)
    guard = Guard(label, fs(symbols), fs(states), frozenset(has), frozenset(lacks),
                  tuple(frozenset(s) for s in any_of))
    rel = None if relay is None else tuple(sorted(dict(relay).items()))
    return Rule(guard, Output(frozenset(emit), symbol, state, rel), name, catch_all)


def catch_all(name="catch-all", **out) -> Rule:
    return rule(name, catch_all=True, **out)


# ---------------------------------------------------------------------------
# machines


class GraphMachine:
    """``(graph, alphabet, (states, initial, alpha), rules)``.

    The lookup table is the ordered rule list: the first matching rule wins.
    Inputs incompatible with ``gamma``/``alpha`` are mapped to themselves.
    """

    def __init__(self, graph: Graph, alphabet: Iterable[Symbol], states: Iterable[State],
                 initial: State, alpha: Mapping[Label, Iterable[State]], rules: Iterable[Rule],
                 name: str = ""):
        self.graph = graph
        self.alphabet = tuple(sorted(set(alphabet)))
        if 0 not in self.alphabet or 1 not in self.alphabet:
            raise ValueError("alphabet must contain 0 and 1")
        self.states = frozenset(states)
        self.initial = initial
        self.alpha = {lab: frozenset(ss) for lab, ss in alpha.items()}
        self.rules = tuple(rules)
        self.name = name
        self._cache: dict = {}
        self.quiescent: Cell = (EMPTY, 0, initial)

    def lookup(self, label, received: frozenset, z, t) -> tuple:
        """Return ``(cell, rule_index)``; ``rule_index`` is -1 for the
        trivial action on incompatible inputs and ``None`` if nothing matched."""
        key = (label, received, z, t)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        gam = self.graph.gamma.get(label, EMPTY)
        if not received <= gam or t not in self.alpha.get(label, EMPTY):
            res = ((received, z, t), -1)
        else:
            res = ((received, z, t), None)
            for i, r in enumerate(self.rules):
                if r.guard.matches(label, received, z, t):
                    res = (r.output.apply(received, z, t), i)
                    break
        self._cache[key] = res
        return res

    def T(self, label, received, z, t) -> Cell:
        return self.lookup(label, frozenset(received), z, t)[0]

    def with_graph(self, graph: Graph, name: Optional[str] = None) -> "GraphMachine":
        m = GraphMachine(graph, self.alphabet, self.states, self.initial, self.alpha,
                         self.rules, self.name if name is None else name)
        m._cache = self._cache  # same table, same answers
        return m

    def structurally_equal(self, other: "GraphMachine") -> bool:
        return (self.alphabet == other.alphabet and self.states == other.states
                and self.initial == other.initial and self.alpha == other.alpha
                and self.rules == other.rules and self.graph == other.graph)

    def __repr__(self) -> str:
        return f"GraphMachine({self.name or '?'}, {len(self.rules)} rules)"


def restrict(m: GraphMachine, A: Iterable[Vertex]) -> GraphMachine:
    """``m|_A``: same alphabet, states and table on the induced subgraph."""
    return m.with_graph(restrict_graph(m.graph, A))


# ---------------------------------------------------------------------------
# configurations


class Configuration:
    """Total assignment vertex -> cell, stored as exceptions to the
    quiescent cell ``(∅, 0, s)``.  Default cells are never stored, so
    equality of configurations is equality of the exception maps."""

    __slots__ = ("initial", "_cells", "_hash")

    def __init__(self, initial: State, cells: Optional[Mapping] = None):
        self.initial = initial
        q = (EMPTY, 0, initial)
        self._cells = {v: c for v, c in (cells or {}).items() if c != q}
        self._hash = None

    @property
    def default(self) -> Cell:
        return (EMPTY, 0, self.initial)

    def __getitem__(self, v) -> Cell:
        return self._cells.get(v, (EMPTY, 0, self.initial))

    def emitted(self, v) -> frozenset:
        return self[v][0]

    def symbol(self, v):
        return self[v][1]

    def state(self, v):
        return self[v][2]

    def support(self) -> list:
        return sort_vertices(self._cells)

    def items(self):
        return self._cells.items()

    def __len__(self) -> int:
        return len(self._cells)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.initial == other.initial and self._cells == other._cells

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._cells.items()))
        return self._hash

    def restricted(self, A) -> "Configuration":
        A = set(A)
        return Configuration(self.initial, {v: c for v, c in self._cells.items() if v in A})

    def displayed(self) -> dict:
        """Nonzero displayed symbols."""
        return {v: c[1] for v, c in self._cells.items() if c[1] != 0}

    def __repr__(self) -> str:
        body = ", ".join(f"{v}: {tuple(sorted(c[0])), c[1], c[2]}"
                         for v, c in sorted(self._cells.items(), key=lambda kv: vkey(kv[0])))
        return f"Configuration({{{body}}})"


def is_valid(m: GraphMachine, f: Configuration) -> bool:
    g = m.graph
    for v, (emit, z, t) in f.items():
        lab = g.label(v)
        if not emit <= g.gamma.get(lab, EMPTY) or t not in m.alpha.get(lab, EMPTY):
            return False
        if z not in m.alphabet:
            return False
    return True


def lift_input(m: GraphMachine, x: Mapping[Vertex, Symbol]) -> Configuration:
    """The starting configuration ``x̂(v) = (∅, x(v), s)``."""
    cells = {}
    for v, z in x.items():
        if v not in m.graph:
            raise UnknownVertex(v)
        if z not in m.alphabet:
            raise ValueError(f"symbol {z!r} not in alphabet")
        if z != 0:
            cells[v] = (EMPTY, z, m.initial)
    return Configuration(m.initial, cells)


def received_sets(m: GraphMachine, f: Configuration) -> dict:
    """Map each vertex that receives at least one pulse to its received set."""
    g = m.graph
    recv: dict = {}
    for w, (emit, _, _) in f.items():
        if not emit:
            continue
        for v, cs in g.out_edges(w):
            got = cs & emit
            if got:
                prev = recv.get(v)
                recv[v] = got if prev is None else prev | got
    return recv


def step(m: GraphMachine, f: Configuration, fired: Optional[list] = None) -> Configuration:
    """One synchronous step on a sparse configuration.

    Only vertices that are exceptions of ``f`` or receive a pulse are
    evaluated; every other vertex is quiescent and stays fixed.  When
    ``fired`` is a list, ``(vertex, rule)`` pairs for catch-all rules that
    fire are appended to it.
    """
    g = m.graph
    recv = received_sets(m, f)
    active = set(recv)
    active.update(v for v, _ in f.items())
    cells = {}
    for v in active:
        emit, z, t = f[v]
        cell, idx = m.lookup(g.label(v), recv.get(v, EMPTY), z, t)
        if idx is None:
            raise GraphMachineError(f"no rule matches at {v}: {(g.label(v), recv.get(v), z, t)}")
        if fired is not None and idx >= 0 and m.rules[idx].catch_all:
            fired.append((v, m.rules[idx].name))
        cells[v] = cell
    return Configuration(f.initial, cells)


# ---------------------------------------------------------------------------
# runs


@dataclass(frozen=True)
class Halted:
    stage: int


@dataclass(frozen=True)
class NonHalting:
    cycle_start: int
    period: int


@dataclass(frozen=True)
class BudgetExhausted:
    steps: int


@dataclass
class RunTrace:
    configs: list
    verdict: object
    catch_all_fired: list = field(default_factory=list)  # (stage, vertex, rule name)

    @property
    def halted(self) -> bool:
        return isinstance(self.verdict, Halted)

    @property
    def final(self) -> Configuration:
        if isinstance(self.verdict, Halted):
            return self.configs[self.verdict.stage]
        return self.configs[-1]

    def __getitem__(self, n: int) -> Configuration:
        return self.configs[n]

    def __len__(self) -> int:
        return len(self.configs)


def run(m: GraphMachine, f: Configuration, max_steps: int, detect_cycles: bool = True) -> RunTrace:
    """Iterate :func:`step` until two consecutive configurations agree.

    A repeated non-consecutive configuration proves divergence (the step is
    deterministic), reported as ``NonHalting``.
    """
    configs = [f]
    fired: list = []
    seen = {f: 0} if detect_cycles else None
    cur = f
    for n in range(max_steps + 1):
        buf: list = []
        nxt = step(m, cur, buf)
        fired.extend((n + 1, v, name) for v, name in buf)
        if nxt == cur:
            return RunTrace(configs, Halted(n), fired)
        if n == max_steps:
            break
        configs.append(nxt)
        if seen is not None:
            prev = seen.get(nxt)
            if prev is not None:
                return RunTrace(configs, NonHalting(prev, n + 1 - prev), fired)
            seen[nxt] = n + 1
        cur = nxt
    return RunTrace(configs, BudgetExhausted(max_steps), fired)


@dataclass(frozen=True)
class Unknown:
    steps: int


def machine_function(m: GraphMachine, x: Mapping[Vertex, Symbol], max_steps: int):
    """``{m}(x)`` as the nonzero part of the halted display, or ``Unknown``
    if the run has not halted within the budget (or provably diverges)."""
    tr = run(m, lift_input(m, x), max_steps)
    if isinstance(tr.verdict, Halted):
        return tr.final.displayed()
    return Unknown(max_steps)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    rule: str  # "quiescent fixed point" | "validity preservation" | "invalid-input triviality" | "no matching rule"
    witness: tuple  # (label, received, symbol, state)


@dataclass
class ValidationReport:
    violations: list
    checked: int
    exhaustive: bool

    @property
    def ok(self) -> bool:
        return not self.violations


def _powerset(xs):
    xs = sorted(xs)
    return (frozenset(c) for r in range(len(xs) + 1) for c in itertools.combinations(xs, r))


def validate_machine(m: GraphMachine, sample_budget: int = 20000, seed: int = 0) -> ValidationReport:
    """Check the closure rules of the lookup table over its guard domain.

    Exhaustive over ``labels x subsets(gamma) x alphabet x alpha`` when that
    domain has at most ``sample_budget`` points, otherwise a random sample
    of that size (always including the quiescent inputs).
    """
    viol = []
    labels = sorted(m.graph.labels())
    sizes = {lab: (2 ** len(m.graph.gamma.get(lab, ()))) * len(m.alphabet) * len(m.alpha.get(lab, ()))
             for lab in labels}
    exhaustive = sum(sizes.values()) <= sample_budget
    rng = random.Random(seed)

    def points():
        for lab in labels:
            yield lab, EMPTY, 0, m.initial
        if exhaustive:
            for lab in labels:
                for X in _powerset(m.graph.gamma.get(lab, ())):
                    for z in m.alphabet:
                        for t in sorted(m.alpha.get(lab, ())):
                            yield lab, X, z, t
        else:
            for _ in range(sample_budget):
                lab = rng.choice(labels)
                gam = sorted(m.graph.gamma.get(lab, ()))
                X = frozenset(c for c in gam if rng.random() < 0.3)
                yield lab, X, rng.choice(m.alphabet), rng.choice(sorted(m.alpha.get(lab, (m.initial,))))

    checked = 0
    for lab, X, z, t in points():
        checked += 1
        cell, idx = m.lookup(lab, X, z, t)
        w = (lab, X, z, t)
        if idx is None:
            viol.append(Violation("no matching rule", w))
            continue
        if X == EMPTY and z == 0 and t == m.initial and cell != (EMPTY, 0, m.initial):
            viol.append(Violation("quiescent fixed point", w))
        if not cell[0] <= m.graph.gamma.get(lab, EMPTY) or cell[2] not in m.alpha.get(lab, EMPTY) \
                or cell[1] not in m.alphabet:
            viol.append(Violation("validity preservation", w))
    # invalid inputs: a received color outside gamma, or a state outside alpha
    all_colors = set().union(*m.graph.gamma.values()) if m.graph.gamma else set()
    for lab in labels:
        gam = m.graph.gamma.get(lab, EMPTY)
        extra = sorted(all_colors - gam)
        bad_states = sorted(m.states - m.alpha.get(lab, EMPTY))
        probes = []
        if extra:
            probes.append((frozenset([extra[0]]), 0, m.initial))
        if bad_states:
            probes.append((EMPTY, 0, bad_states[0]))
        for X, z, t in probes:
            checked += 1
            if m.lookup(lab, X, z, t)[0] != (X, z, t):
                viol.append(Violation("invalid-input triviality", (lab, X, z, t)))
    if not any(r.catch_all or r.guard == Guard() for r in m.rules):
        viol.append(Violation("no matching rule", ("<missing catch-all>",)))
    return ValidationReport(viol, checked, exhaustive)


def iter_vertices(g: Graph) -> Iterator[Vertex]:
    return iter(g.vertices())
