"""Builders for the explicit machines: the limit subroutine, the activation
broadcaster, the iterated-limit machine, the alternation machines and their
disjoint unions, plus a driver harness for testing subroutines alone.

Vertex naming:

* limit machine: ``(k,)`` for ``k < N`` and ``("*",)``;
* broadcaster and iterated limit: ``("star", i)`` for ``-5n <= i <= 0``;
  grid vertices of the iterated limit are int tuples of length ``1..n``;
* alternation machine: ``(i,)``;
* disjoint unions append the component tag, so vertex ``(n,)`` of
  component ``m`` becomes ``(n, m)``;
* drivers: ``("driver", i)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .core import (DisallowedColor, FiniteGraph, Guard, GraphMachine, LazyGraph,
                   MismatchedTables, Rule, UnknownVertex, catch_all, rule)

# colors
B0, B1, SB, SF0, SF1, A = "B0", "B1", "SB", "SF0", "SF1", "A"
S, R, Q, C0, C1 = "S", "R", "Q", "C0", "C1"
B = (B0, B1)
SF = (SF0, SF1)
C = (C0, C1)

LIMIT_COLORS = frozenset({B0, B1, SB, SF0, SF1, A})
BROADCAST_COLORS = frozenset({S, R, Q, A, SF0, SF1})
P_COLORS = frozenset({C0, C1, B0, B1, SB, SF0, SF1, A})
Q_COLORS = BROADCAST_COLORS | {SB}

LIMIT_STATES = ("s", "a0", "a1", "a2", "u", "b")
BROADCAST_STATES = ("s", "d", "r", "u")

STAR = "star"
ROOT = ("*",)


def star(i: int) -> tuple:
    return (STAR, i)


# ---------------------------------------------------------------------------
# lookup tables


def limit_rules(label: str = "p") -> list:
    """The limit subroutine's table, in priority order.

    A vertex that has been activated and is waiting in ``a2`` keeps waiting
    until a final pulse arrives.
    """
    L = label
    return [
        rule("L(i) clean slate", label=L, states="s", lacks=LIMIT_COLORS | set(C), symbol=0),
        rule("L(ii) activate", label=L, has=[A], symbol=0, state="a0"),
        rule("L(iii) start", label=L, states="a0", emit=[SB], symbol=0, state="a1"),
        rule("L(iv) pause", label=L, states="a1", symbol=0, state="a2"),
        rule("L(v) result 0", label=L, states="a2", has=[SF0], lacks=[SF1], symbol=0, state="u"),
        rule("L(v) result 1", label=L, states="a2", has=[SF1], lacks=[SF0], symbol=1, state="u"),
        rule("L(v) wait", label=L, states="a2", lacks=SF, symbol=0, state="a2"),
        rule("L(vi) announce 0", label=L, has=[SB], states=("s", "u", "b"), symbols=0,
             emit=[B0], symbol=0, state="b"),
        rule("L(vi) announce 1", label=L, has=[SB], states=("s", "u", "b"), symbols=1,
             emit=[B1], symbol=0, state="b"),
        rule("L(vii) tail 0", label=L, states="b", has=[B0], lacks=[B1], emit=[SF0], symbol=0,
             state="u"),
        rule("L(vii) tail 1", label=L, states="b", has=[B1], lacks=[B0], emit=[SF1], symbol=0,
             state="u"),
        rule("L(viii) mixed tail", label=L, states="b", has=B, symbol=0, state="u"),
        rule("L(ix) done", label=L, states="u", lacks=[A], state="u"),
        catch_all("L(x)", label=L, symbol=0, state="u"),
    ]


def broadcast_rules(label: str = "q", start_final_limit: bool = False) -> list:
    """The broadcaster's table.  With ``start_final_limit`` the vertex
    leaving ``d`` also emits ``SB`` so that ``star_0`` can open the last
    limit."""
    L = label
    go = [R, SB] if start_final_limit else [R]
    return [
        rule("B(i) idle", label=L, symbols=0, states="s", lacks=[R, S, Q], symbol=0, state="s"),
        rule("B(ii) start", label=L, symbols=1, states="s", emit=[S], symbol=0, state="s"),
        rule("B(iii) loop back", label=L, states="s", has=[S], lacks=[R], emit=[Q], symbol=0,
             state="s"),
        rule("B(iv) activate", label=L, states="s", any_of=[[Q, R]], emit=[A], symbol=0, state="d"),
        rule("B(v) pass on", label=L, states="d", emit=go, symbol=0, state="r"),
        rule("B(vi) result 0", label=L, states="r", has=[SF0], lacks=[SF1], symbol=0, state="u"),
        rule("B(vi) result 1", label=L, states="r", has=[SF1], lacks=[SF0], symbol=1, state="u"),
        rule("B(vi) wait", label=L, states="r", symbol=0, state="r"),
        rule("B(vii) hold", label=L, states="u", relay=[(c, c) for c in sorted(Q_COLORS)],
             state="u"),
        catch_all("B(viii)", label=L, symbol=0, state="u"),
    ]


def iterated_limit_rules() -> list:
    """Table shared by every iterated-limit machine (independent of n, g, e)."""
    p_states = frozenset(LIMIT_STATES)
    busy = Guard(label="p", states=p_states - {"s"}, lacks=frozenset([A]))
    out = [
        rule("T clean slate", label="p", states="s", lacks=P_COLORS, symbol=0),
        rule("T(iii) initialise", label="p", states="s", has=[A], emit=C, symbol=0, state="a0"),
        rule("T(iv) value 0", label="p", states="a0", has=[C0], lacks=[C1], symbol=0, state="u"),
        rule("T(iv) value 1", label="p", states="a0", has=[C1], lacks=[C0], symbol=1, state="u"),
    ]
    for r in limit_rules("p"):
        g = r.guard.conjoin(busy)
        if g.states is not None and not g.states:
            continue
        if g.has & g.lacks:
            continue
        out.append(Rule(g, r.output, "T(ii) " + r.name, r.catch_all))
    out.append(catch_all("T(v)", label="p", symbol=0, state="u"))
    out.extend(broadcast_rules("q", start_final_limit=True))
    return out


# ---------------------------------------------------------------------------
# limit subroutine


def build_limit_machine(N: int) -> GraphMachine:
    """Limit subroutine on ``{0..N-1} ∪ {*}``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    vs = [(k,) for k in range(N)] + [ROOT]
    edges = {}
    for m in range(N):
        for mp in range(m, N):
            edges[((mp,), (m,))] = {B0, B1}
        edges[(ROOT, (m,))] = {SB}
        edges[((m,), ROOT)] = {SF0, SF1}
    g = FiniteGraph(vs, {v: "p" for v in vs}, {"p": LIMIT_COLORS}, edges)
    return GraphMachine(g, (0, 1), LIMIT_STATES, "s", {"p": LIMIT_STATES}, limit_rules("p"),
                        name=f"limit(N={N})")


# ---------------------------------------------------------------------------
# broadcaster


def broadcaster_edges(n: int) -> dict:
    edges = {}
    for i in range(-5 * n, 0):
        edges[(star(i), star(i + 1))] = {R}
    edges[(star(0), star(0))] = {S}
    edges[(star(0), star(-5 * n))] = {Q}
    return edges


def build_broadcaster(n: int) -> GraphMachine:
    """Chain ``star_{-5n} .. star_0`` that fires activation pulses in order."""
    if n < 1:
        raise ValueError("n must be at least 1")
    vs = [star(i) for i in range(-5 * n, 1)]
    g = FiniteGraph(vs, {v: "q" for v in vs}, {"q": BROADCAST_COLORS}, broadcaster_edges(n))
    return GraphMachine(g, (0, 1), BROADCAST_STATES, "s", {"q": BROADCAST_STATES},
                        broadcast_rules("q"), name=f"broadcaster(n={n})")


# ---------------------------------------------------------------------------
# iterated limits


@dataclass
class LimitTable:
    """A binary table ``g`` on ``{0..N-1}^n`` for one fixed input ``e``.

    ``g`` is a callable on int tuples of length ``n`` or a mapping from them.
    """

    n: int
    e: int
    g: Union[Callable, Mapping]
    N: int

    def value(self, c: tuple) -> int:
        v = self.g[c] if isinstance(self.g, Mapping) else self.g(c)
        if v not in (0, 1):
            raise ValueError(f"table value {v!r} at {c} is not binary")
        return v

    def grid(self, depth: Optional[int] = None):
        return itertools.product(range(self.N), repeat=self.n if depth is None else depth)


def _ge_labels(v) -> str:
    return "q" if v[0] == STAR else "p"


def _ge_edge(n: int, value: Callable) -> Callable:
    """Edge coloring of the iterated-limit graph on the untruncated domain."""

    def edge(v, w) -> frozenset:
        out = set()
        vs, ws = v[0] == STAR, w[0] == STAR
        if vs and ws:
            i, j = v[1], w[1]
            if i < 0 and j == i + 1:
                out.add(R)
            if i == 0 and j == -5 * n:
                out.add(Q)
            if j == 0:
                out.add(S)
                if i == 0:
                    out.add(A)
        elif vs:
            i, d = v[1], len(w)
            if i == -5 * d:
                out.add(A)
            if i == 0 and d == 1:
                out.add(SB)
        elif ws:
            if w[1] == 0 and len(v) == 1:
                out.update(SF)
        else:
            if len(v) == len(w) and v[:-1] == w[:-1]:
                if v[-1] >= w[-1]:
                    out.update(B)
                if v == w and len(v) == n:
                    out.add(C[value(v)])
            elif w == v[:-1]:
                out.update(SF)
            elif v == w[:-1]:
                out.add(SB)
        return frozenset(out)

    return edge


def _ge_domain(n: int, N: int) -> list:
    vs = [star(i) for i in range(-5 * n, 1)]
    for d in range(1, n + 1):
        vs.extend(itertools.product(range(N), repeat=d))
    return vs


def build_iterated_limit_machine(t: LimitTable) -> GraphMachine:
    """Nested-limit machine truncated to ``{0..N-1}`` in each coordinate.

    Started with ``star_0`` displaying 1 it halts with ``star_0`` showing
    the iterated limit of the truncated table.
    """
    n, N = t.n, t.N
    if n < 1 or N < 2:
        raise ValueError("need n >= 1 and N >= 2")
    for c in t.grid():
        t.value(c)
    edge = _ge_edge(n, t.value)
    vs = _ge_domain(n, N)
    edges = {}
    # stars
    stars = [star(i) for i in range(-5 * n, 1)]
    for v in stars:
        for w in stars:
            cs = edge(v, w)
            if cs:
                edges[(v, w)] = cs
    for d in range(1, n + 1):
        for c in itertools.product(range(N), repeat=d):
            edges[(star(-5 * d), c)] = {A}
            parent = star(0) if d == 1 else c[:-1]
            edges[(parent, c)] = {SB}
            edges[(c, parent)] = set(SF)
            for k in range(c[-1], N):
                edges[(c[:-1] + (k,), c)] = set(B)
            if d == n:
                edges[(c, c)] = {B0, B1, C[t.value(c)]}
    g = FiniteGraph(vs, {v: _ge_labels(v) for v in vs}, {"p": P_COLORS, "q": Q_COLORS}, edges)
    return GraphMachine(g, (0, 1), LIMIT_STATES + ("d", "r"), "s",
                        {"p": LIMIT_STATES, "q": BROADCAST_STATES}, iterated_limit_rules(),
                        name=f"iterated_limit(n={n},e={t.e},N={N})")


def lazy_iterated_limit_machine(n: int, g: Callable, e: int = 0) -> GraphMachine:
    """The untruncated iterated-limit machine over ``N^n ∪ ... ∪ N``.

    Out-degrees are infinite, so only ``edge`` and the exhaustion
    ``B_N = {0..N-1}^{<=n} ∪ stars`` are provided; run it with
    :func:`gtm.engine.run_truncated`.
    """
    if n < 1:
        raise ValueError("n must be at least 1")

    def value(c):
        v = g(c)
        if v not in (0, 1):
            raise ValueError(f"table value {v!r} at {c} is not binary")
        return v

    def contains(v):
        if len(v) == 2 and v[0] == STAR:
            return isinstance(v[1], int) and -5 * n <= v[1] <= 0
        return 1 <= len(v) <= n and all(isinstance(x, int) and x >= 0 for x in v)

    graph = LazyGraph(contains, _ge_labels, {"p": P_COLORS, "q": Q_COLORS},
                      edge=_ge_edge(n, value), exhaustion=lambda N: _ge_domain(n, N),
                      name=f"iterated_limit(n={n},e={e})")
    return GraphMachine(graph, (0, 1), LIMIT_STATES + ("d", "r"), "s",
                        {"p": LIMIT_STATES, "q": BROADCAST_STATES}, iterated_limit_rules(),
                        name=f"iterated_limit(n={n},e={e})")


def iterated_limit_halting_stage(n: int) -> int:
    """Stage at which a triggered iterated-limit run reaches its fixed point."""
    return 10 * n + 7


# ---------------------------------------------------------------------------
# alternation machines


@dataclass
class AlternationTable:
    """Values ``{e}(0..M-1)`` of a binary sequence, constant from ``M-1`` on."""

    seq: Sequence[int]

    def __post_init__(self):
        self.seq = tuple(int(x) for x in self.seq)
        if not self.seq:
            raise ValueError("sequence must be nonempty")
        if any(x not in (0, 1) for x in self.seq):
            raise ValueError("sequence must be binary")

    def __getitem__(self, n: int) -> int:
        if n == -1:
            return 1 - self.seq[0]
        return self.seq[min(n, len(self.seq) - 1)]

    @property
    def alternations(self) -> list:
        """Indices ``n >= 0`` with ``e(n) != e(n+1)``."""
        return [n for n in range(len(self.seq) - 1) if self.seq[n] != self.seq[n + 1]]

    @property
    def k(self) -> int:
        return len(self.alternations)

    @property
    def limit(self) -> int:
        return self.seq[-1]


ALT_LABEL = "f"
ALT_COLORS = frozenset({"r", "g", "b"})


def alternation_rules() -> list:
    """Rules of the alternation table, one per (state, display, r-or-g, b)."""
    out = []
    for t, z, rg, b in itertools.product(("s", "a"), (0, 1), (False, True), (False, True)):
        emit = set()
        z2 = z
        if t == "s" and z == 1:
            emit.add("r")
            z2 = 0
        if rg:
            emit.update("bg")
        t2 = t
        if b:
            t2 = "a"
            z2 = 1 - z2
        kw = {}
        if rg:
            kw["any_of"] = [["r", "g"]]
        else:
            kw["lacks"] = ["r", "g"] + ([] if b else ["b"])
        if b:
            kw["has"] = ["b"]
        elif rg:
            kw["lacks"] = ["b"]
        out.append(rule(f"F({t},{z},{'rg' if rg else '-'},{'b' if b else '-'})", label=ALT_LABEL,
                        states=t, symbols=z, emit=sorted(emit), symbol=z2, state=t2, **kw))
    out.append(catch_all("F default", label=ALT_LABEL))
    return out


def alternation_edges(t: AlternationTable) -> dict:
    edges = {((0,), (1,)): {"r"}, ((2,), (0,)): {"b"}}
    # the direct path 1 -> 2 counts the alternation from 0 to e(0)
    if t[0] == 1:
        edges[((1,), (2,))] = {"g"}
    prev = -1
    for n in t.alternations:
        edges[((2 * prev + 3,), (2 * n + 3,))] = {"g"}
        edges[((2 * n + 3,), (2 * n + 4,))] = {"g"}
        edges[((2 * n + 4,), (2 * prev + 4,))] = {"g"}
        prev = n
    return edges


def build_alternation_machine(t: Union[AlternationTable, Sequence[int]]) -> GraphMachine:
    if not isinstance(t, AlternationTable):
        t = AlternationTable(t)
    M = len(t.seq)
    vs = [(i,) for i in range(2 * M + 3)]
    g = FiniteGraph(vs, {v: ALT_LABEL for v in vs}, {ALT_LABEL: ALT_COLORS}, alternation_edges(t),
                    degree_bound=3)
    return GraphMachine(g, (0, 1), ("s", "a"), "s", {ALT_LABEL: ("s", "a")}, alternation_rules(),
                        name="alternation(" + "".join(map(str, t.seq)) + ")")


def alternation_halting_stage(t: Union[AlternationTable, Sequence[int]]) -> int:
    """Halting stage from vertex 0 displaying 1: the last b-pulse lands at
    ``2K + 4`` for ``K`` alternations, unless no pulse is sent at all."""
    if not isinstance(t, AlternationTable):
        t = AlternationTable(t)
    if t.k == 0 and t[0] == 0:
        return 3
    return 2 * t.k + 4


# ---------------------------------------------------------------------------
# disjoint unions


def _tagged(v, tag) -> tuple:
    return v + (tag if isinstance(tag, tuple) else (tag,))


def disjoint_union(machines: Sequence[GraphMachine], tags: Optional[Sequence] = None,
                   name: str = "") -> GraphMachine:
    """Union of finite machines sharing one table; component ``i`` is tagged
    by appending ``tags[i]`` (default ``i``) to its vertex tuples."""
    if not machines:
        raise ValueError("need at least one machine")
    tags = list(range(len(machines))) if tags is None else list(tags)
    if len(set(tags)) != len(tags):
        raise ValueError("tags must be distinct")
    m0 = machines[0]
    gamma: dict = {}
    for m in machines:
        if (m.alphabet, m.states, m.initial, m.alpha, m.rules) != \
                (m0.alphabet, m0.states, m0.initial, m0.alpha, m0.rules):
            raise MismatchedTables(f"{m.name} and {m0.name} have different tables")
        for lab, cs in m.graph.gamma.items():
            if gamma.setdefault(lab, cs) != cs:
                raise MismatchedTables(f"label {lab!r} has different allowable colors")
    vs, labels, edges = [], {}, {}
    for m, tag in zip(machines, tags):
        g = m.graph
        if not g.finite:
            raise ValueError("disjoint_union needs finite components")
        for v in g.vertices():
            tv = _tagged(v, tag)
            vs.append(tv)
            labels[tv] = g.label(v)
        for (v, w), cs in g.edges().items():
            edges[(_tagged(v, tag), _tagged(w, tag))] = cs
    bounds = [m.graph.degree_bound for m in machines]
    db = max(bounds) if all(b is not None for b in bounds) else None
    graph = FiniteGraph(vs, labels, gamma, edges, degree_bound=db)
    return GraphMachine(graph, m0.alphabet, m0.states, m0.initial, m0.alpha, m0.rules,
                        name=name or f"union({len(machines)})")


def build_nx(Y: Union[Callable, Mapping], m_range: Iterable[int], n_cap: int) -> GraphMachine:
    """Union over ``m`` of the alternation machines for the columns
    ``Y(0, m), ..., Y(n_cap - 1, m)``; vertex ``(n, m)`` is vertex ``n`` of
    component ``m``."""
    get = (lambda n, m: Y[(n, m)]) if isinstance(Y, Mapping) else Y
    ms = list(m_range)
    comps = [build_alternation_machine([get(n, m) for n in range(n_cap)]) for m in ms]
    return disjoint_union(comps, ms, name=f"nx(m={ms[0]}..{ms[-1]},cap={n_cap})")


def nx_columns(Y: Union[Callable, Mapping], m_range: Iterable[int], n_cap: int) -> dict:
    get = (lambda n, m: Y[(n, m)]) if isinstance(Y, Mapping) else Y
    return {m: AlternationTable([get(n, m) for n in range(n_cap)]) for m in m_range}


def build_omega_machine(n_max: int, e_set: Iterable[int], N: int,
                        g_family: Callable) -> GraphMachine:
    """Union of iterated-limit machines over ``1 <= n <= n_max`` and
    ``e in e_set``; component ``(n, e)`` is tagged by appending ``n, e``.

    ``g_family(n, e)`` returns the table for that component as a callable on
    ``n``-tuples.
    """
    comps, tags = [], []
    for n in range(1, n_max + 1):
        for e in sorted(e_set):
            comps.append(build_iterated_limit_machine(LimitTable(n, e, g_family(n, e), N)))
            tags.append((n, e))
    return disjoint_union(comps, tags, name=f"omega(n_max={n_max},N={N})")


# ---------------------------------------------------------------------------
# drivers


@dataclass(frozen=True)
class DriverSpec:
    target: tuple
    color: str
    fire_stage: int = 1


def driver_vertex(i: int) -> tuple:
    return ("driver", i)


def attach_driver(m: GraphMachine, d: DriverSpec) -> GraphMachine:
    """Add a vertex that, when displaying 1 at the start, emits ``d.color``
    into ``d.target`` at stage ``d.fire_stage`` (so the target receives it in
    the step to ``fire_stage + 1``) and then stays silent."""
    g = m.graph
    if not g.finite:
        raise ValueError("drivers attach to finite machines")
    if d.target not in g:
        raise UnknownVertex(d.target)
    if d.color not in g.gamma.get(g.label(d.target), ()):
        raise DisallowedColor(f"{d.color} not allowed at {d.target}")
    if d.fire_stage < 1:
        raise ValueError("fire_stage must be at least 1")
    i = sum(1 for v in g.vertices() if v[0] == "driver")
    dv = driver_vertex(i)
    lab = f"driver{i}"
    F = d.fire_stage
    wait = [f"wait{j}" for j in range(1, F)]
    states = ["s"] + wait + ["fired"]
    rules = [
        rule(f"{lab} start", label=lab, states="s", symbols=1,
             emit=[d.color] if F == 1 else [], symbol=0, state="fired" if F == 1 else f"wait{F - 1}"),
        rule(f"{lab} idle", label=lab, states="s", symbol=0, state="s"),
    ]
    for j in range(F - 1, 0, -1):
        if j == 1:
            rules.append(rule(f"{lab} fire", label=lab, states="wait1", emit=[d.color], symbol=0,
                              state="fired"))
        else:
            rules.append(rule(f"{lab} count", label=lab, states=f"wait{j}", symbol=0,
                              state=f"wait{j - 1}"))
    rules.append(rule(f"{lab} done", label=lab, states="fired", symbol=0, state="fired"))
    rules.append(catch_all(f"{lab} default", label=lab))
    labels = {v: g.label(v) for v in g.vertices()}
    labels[dv] = lab
    edges = g.edges()
    edges[(dv, d.target)] = {d.color}
    gamma = dict(g.gamma)
    gamma[lab] = frozenset([d.color])
    graph = FiniteGraph(list(g.vertices()) + [dv], labels, gamma, edges)
    alpha = dict(m.alpha)
    alpha[lab] = frozenset(states)
    return GraphMachine(graph, m.alphabet, set(m.states) | set(states), m.initial, alpha,
                        rules + list(m.rules), name=f"{m.name}+driver({d.target},{d.color},{F})")


__all__ = [
    "build_limit_machine", "build_broadcaster", "build_iterated_limit_machine",
    "lazy_iterated_limit_machine", "build_alternation_machine", "disjoint_union", "build_nx",
    "build_omega_machine", "attach_driver", "LimitTable", "AlternationTable", "DriverSpec",
    "limit_rules", "broadcast_rules", "iterated_limit_rules", "alternation_rules", "star",
    "driver_vertex", "iterated_limit_halting_stage", "alternation_halting_stage", "nx_columns",
    "ROOT",
]
