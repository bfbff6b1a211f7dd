"""Execution strategies, neighborhoods, approximations and resource checks.

Three runners are provided:

* :func:`run_finite` for finite graphs, using the array kernel.  It never
  gives up: the configuration space is finite, so a run either reaches a
  fixed point or revisits a configuration.
* :func:`run_finite_degree` for graphs whose neighborhoods can be listed.
  It steps the sparse configuration exactly.
* :func:`run_truncated` restricts the machine to a finite set of a declared
  exhaustion and runs that.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from . import kernel
from .core import (BudgetExhausted, Configuration, DisconnectedSupport, GraphMachine,
                   GraphMachineError, Halted, NonHalting, RunTrace, SupportOutsideTruncation,
                   lift_input, restrict, run, sort_vertices, step)

DEFAULT_MAX_STEPS = 10_000


def _as_config(m: GraphMachine, x) -> Configuration:
    if isinstance(x, Configuration):
        return x
    return lift_input(m, x)


def _support(f: Configuration) -> frozenset:
    return frozenset(v for v, _ in f.items())


# ---------------------------------------------------------------------------
# runners


def run_finite(m: GraphMachine, f, backend=None) -> RunTrace:
    """Exact run on a finite graph; the verdict is Halted or NonHalting."""
    if not m.graph.finite:
        raise GraphMachineError("run_finite needs a finite graph")
    if not kernel.fits(m):
        # too many colors for the bit masks; the sparse stepper still detects cycles
        return run(m, _as_config(m, f), 2 ** 62)
    return kernel.compiled(m, backend).run(_as_config(m, f))


def run_finite_degree(m: GraphMachine, x, max_steps: int = DEFAULT_MAX_STEPS) -> RunTrace:
    """Exact run on a graph whose in- and out-neighborhoods are enumerable.

    Only the support of the configuration and the vertices receiving
    pulses are ever touched, so after ``n`` steps the computation has stayed
    inside ``neighborhood(A, n)`` of the initial support ``A``.
    """
    return run(m, _as_config(m, x), max_steps)


def run_truncated(m: GraphMachine, f, N: int, max_steps: Optional[int] = None) -> RunTrace:
    """Run ``m`` restricted to the ``N``-th set of its exhaustion."""
    B = m.graph.exhaustion(N)
    if B is None:
        raise GraphMachineError("graph declares no exhaustion")
    f = _as_config(m, f)
    outside = _support(f) - B
    if outside:
        raise SupportOutsideTruncation(sort_vertices(outside)[:5])
    mr = m if (m.graph.finite and len(B) == len(m.graph.vertices())) else restrict(m, B)
    if not kernel.fits(mr):
        return run(mr, f, 2 ** 62 if max_steps is None else max_steps)
    return kernel.compiled(mr).run(f, max_steps=max_steps)


def run_any(m: GraphMachine, f, max_steps: int = DEFAULT_MAX_STEPS) -> RunTrace:
    """Pick the kernel for finite graphs and sparse stepping otherwise."""
    if kernel.fits(m):
        return kernel.compiled(m).run(_as_config(m, f), max_steps=max_steps)
    return run_finite_degree(m, f, max_steps)


@dataclass(frozen=True)
class Stable:
    output: dict
    N: int


@dataclass(frozen=True)
class Unstable:
    outputs: tuple  # (N, output or verdict) per tried N


def stabilized_output(m: GraphMachine, x, N_start: int, window: int,
                      max_steps: Optional[int] = None, observe: Optional[Iterable] = None):
    """Run truncations ``N_start .. N_start + window`` and report whether the
    halted outputs agree (on ``observe`` if given)."""
    obs = None if observe is None else frozenset(observe)
    seen = []
    for N in range(N_start, N_start + window + 1):
        tr = run_truncated(m, x, N, max_steps)
        if not tr.halted:
            seen.append((N, tr.verdict))
            continue
        out = tr.final.displayed()
        if obs is not None:
            out = {v: z for v, z in out.items() if v in obs}
        seen.append((N, out))
    outs = [o for _, o in seen]
    if all(isinstance(o, dict) for o in outs) and all(o == outs[0] for o in outs):
        return Stable(outs[0], N_start)
    return Unstable(tuple(seen))


# ---------------------------------------------------------------------------
# neighborhoods and approximations


def neighborhood(g, A: Iterable, n: int) -> frozenset:
    """``N_n(A)``: close ``A`` ``n`` times under incident edges."""
    cur = frozenset(A)
    frontier = set(cur)
    for _ in range(n):
        new = set()
        for v in frontier:
            new.update(w for w in g.neighbors(v) if w not in cur)
        if not new:
            break
        cur = cur | new
        frontier = new
    return cur


def is_connected(g, A: Iterable) -> bool:
    """Undirected connectivity of the subgraph induced on ``A``."""
    A = set(A)
    if len(A) <= 1:
        return True
    start = next(iter(A))
    seen = {start}
    todo = deque([start])
    while todo:
        v = todo.popleft()
        for w in A - seen:
            if g.edge(v, w) or g.edge(w, v):
                seen.add(w)
                todo.append(w)
    return seen == A


def _one_step(m: GraphMachine, f: Configuration, B) -> Configuration:
    mb = restrict(m, B)
    tr = run(mb, f.restricted(B), 1)
    return tr.configs[1] if len(tr.configs) > 1 else tr.configs[0]


def check_one_approximation(m: GraphMachine, f: Configuration, A, B,
                            supersets: Sequence) -> bool:
    """Whether ``(A, B)`` behaves as a 1-approximation of ``m`` and ``f`` on
    ``A`` relative to the given supersets of ``B``.

    One step of ``m|_B`` on ``f|_B`` must agree with one step of ``m|_S`` on
    ``f|_S`` at every vertex of ``A``, for each ``S`` in ``supersets``.
    """
    A, B = frozenset(A), frozenset(B)
    if not A <= B:
        raise ValueError("A must be a subset of B")
    base = _one_step(m, f, B)
    for S in supersets:
        S = frozenset(S)
        if not B <= S:
            raise ValueError("superset does not contain B")
        other = _one_step(m, f, S)
        if any(base[v] != other[v] for v in A):
            return False
    return True


def iterate_uniform_approximation(theta: Callable, A, n: int) -> list:
    """The chain ``A, theta(A), ..., theta^n(A)``."""
    chain = [frozenset(A)]
    for _ in range(n):
        nxt = frozenset(theta(chain[-1]))
        if not chain[-1] <= nxt:
            raise ValueError("theta is not extensive")
        chain.append(nxt)
    return chain


def check_approximation_chain(m: GraphMachine, f: Configuration, chain: Sequence,
                              supersets: Callable[[int, frozenset], Sequence]) -> list:
    """Check each link ``(B_i, B_{i+1})`` against ``f_i`` (the full run at
    stage ``i``).  Returns one bool per link."""
    out = []
    fi = f
    for i in range(len(chain) - 1):
        out.append(check_one_approximation(m, fi, chain[i], chain[i + 1],
                                           supersets(i, chain[i + 1])))
        fi = step(m, fi)
    return out


# ---------------------------------------------------------------------------
# resource checks


@dataclass
class ResourceRecord:
    index: int
    size: int
    stage: Optional[int]
    radius: Optional[int] = None
    neighborhood_size: Optional[int] = None
    ok: bool = True
    note: str = ""


@dataclass
class ResourceReport:
    bound: str
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.records)

    def lines(self) -> list:
        out = [f"bound: {self.bound}"]
        for r in sorted(self.records, key=lambda r: r.index):
            extra = ""
            if r.radius is not None:
                extra = f" radius={r.radius} nbhd={r.neighborhood_size}"
            note = f" ({r.note})" if r.note else ""
            out.append(f"input {r.index}: |A|={r.size} stage={r.stage}{extra} "
                       f"{'pass' if r.ok else 'fail'}{note}")
        out.append(f"verdict: {'pass' if self.passed else 'fail'}")
        return out


@dataclass
class DegreeInfo:
    values: dict
    bound: Optional[int]

    @property
    def ok(self) -> bool:
        return self.bound is None or all(d <= self.bound for d in self.values.values())


def degree_info(g, sample: Optional[Iterable] = None) -> DegreeInfo:
    vs = g.vertices() if sample is None else sample
    return DegreeInfo({v: g.degree(v) for v in vs}, g.degree_bound)


def _linear(pq, n: int) -> int:
    a, b = pq
    return a * n + b


def _connected_support(m, f, i):
    A = _support(f)
    if not is_connected(m.graph, A):
        raise DisconnectedSupport(f"input {i}: support {sort_vertices(A)} is not connected")
    return A


def check_constant_time(m: GraphMachine, inputs: Sequence, c: int) -> ResourceReport:
    """Each run must halt by stage ``c`` (so stage ``c + 1`` equals ``c``)."""
    rep = ResourceReport(f"constant time {c}")
    for i, x in enumerate(inputs):
        f = _as_config(m, x)
        A = _connected_support(m, f, i)
        tr = run_any(m, f, max_steps=c)
        st = tr.verdict.stage if isinstance(tr.verdict, Halted) else None
        note = "" if st is not None else type(tr.verdict).__name__
        rep.records.append(ResourceRecord(i, len(A), st, ok=st is not None and st <= c, note=note))
    return rep


def _padded(configs, k):
    return configs[k] if k < len(configs) else configs[-1]


def check_linear_space(m: GraphMachine, inputs: Sequence, p, q,
                       max_steps: int = DEFAULT_MAX_STEPS) -> ResourceReport:
    """``|N_{p(n)}(A)| <= q(n)`` and the run of ``m`` restricted to
    ``N_{p(n)}(A)`` agrees with the full run at every vertex of ``A`` and
    every stage.  ``p`` and ``q`` are ``(slope, intercept)`` pairs."""
    rep = ResourceReport(f"linear space p(n)={p[0]}n+{p[1]} q(n)={q[0]}n+{q[1]}")
    for i, x in enumerate(inputs):
        f = _as_config(m, x)
        A = _connected_support(m, f, i)
        n = len(A)
        R = _linear(p, n)
        NB = neighborhood(m.graph, A, R)
        full = run_finite_degree(m, f, max_steps)
        part = run(restrict(m, NB), f.restricted(NB), max_steps)
        ok = len(NB) <= _linear(q, n)
        note = "" if ok else f"|N|={len(NB)} > q(n)={_linear(q, n)}"
        horizon = max(len(full.configs), len(part.configs)) + 1
        for k in range(horizon):
            a, b = _padded(full.configs, k), _padded(part.configs, k)
            if any(a[v] != b[v] for v in A):
                ok = False
                note = f"restricted run differs at stage {k}"
                break
        if not full.halted:
            ok = False
            note = note or type(full.verdict).__name__
        st = full.verdict.stage if full.halted else None
        rep.records.append(ResourceRecord(i, n, st, R, len(NB), ok, note))
    return rep


@dataclass
class GxReport:
    total: bool = True
    depends_only_on_x: bool = True
    zero_off_x: bool = True
    consistent: bool = True
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.total and self.depends_only_on_x and self.zero_off_x and self.consistent

    def lines(self) -> list:
        out = [f"{k}: {'pass' if getattr(self, k) else 'fail'}"
               for k in ("total", "depends_only_on_x", "zero_off_x", "consistent")]
        out += [f"  {msg}" for msg in self.failures]
        out.append(f"verdict: {'pass' if self.passed else 'fail'}")
        return out


def check_gx_computable(m: GraphMachine, X: Callable, inputs: Sequence,
                        max_steps: int = DEFAULT_MAX_STEPS, perturbations: int = 3,
                        seed: int = 0) -> GxReport:
    """Sample the conditions for ``m`` computing a function on ``X``.

    ``X`` is a membership predicate on vertices.  Off-``X`` perturbations
    flip symbols on vertices near each input's support.
    """
    rng = random.Random(seed)
    rep = GxReport()
    g = m.graph
    nonzero = [z for z in m.alphabet if z != 0]

    def output(x):
        tr = run_any(m, lift_input(m, x), max_steps)
        return tr.final.displayed() if tr.halted else None

    by_restriction: dict = {}
    for i, x in enumerate(inputs):
        x = dict(x)
        out = output(x)
        if out is None:
            rep.total = False
            rep.failures.append(f"input {i}: no halt within {max_steps}")
            continue
        off = sort_vertices(v for v, z in out.items() if not X(v))
        if off:
            rep.zero_off_x = False
            rep.failures.append(f"input {i}: nonzero output off X at {off[:3]}")
        key = frozenset((v, z) for v, z in x.items() if X(v) and z != 0)
        on_x = {v: z for v, z in out.items() if X(v)}
        prev = by_restriction.setdefault(key, (i, on_x))
        if prev[1] != on_x:
            rep.consistent = False
            rep.failures.append(f"inputs {prev[0]} and {i} agree on X but differ in output")
        try:
            pool = neighborhood(g, x.keys(), 1)
        except GraphMachineError:
            pool = frozenset(x)
        pool = sort_vertices(v for v in pool if not X(v))
        for _ in range(perturbations if pool else 0):
            y = dict(x)
            v = rng.choice(pool)
            y[v] = rng.choice([z for z in m.alphabet if z != y.get(v, 0)] or nonzero)
            out2 = output(y)
            if out2 is None:
                rep.total = False
                rep.failures.append(f"input {i} perturbed at {v}: no halt")
                continue
            if {w: z for w, z in out2.items() if X(w)} != on_x:
                rep.depends_only_on_x = False
                rep.failures.append(f"input {i}: output on X changes when {v} is perturbed")
    return rep


def verdict_text(v) -> str:
    if isinstance(v, Halted):
        return f"halted at stage {v.stage}"
    if isinstance(v, NonHalting):
        return f"nonhalting: cycle from stage {v.cycle_start} with period {v.period}"
    if isinstance(v, BudgetExhausted):
        return f"budget exhausted after {v.steps} steps"
    return str(v)


__all__ = [
    "run_finite", "run_finite_degree", "run_truncated", "run_any", "stabilized_output",
    "Stable", "Unstable", "neighborhood", "is_connected", "check_one_approximation",
    "iterate_uniform_approximation", "check_approximation_chain", "check_constant_time",
    "check_linear_space", "check_gx_computable", "ResourceReport", "ResourceRecord",
    "GxReport", "DegreeInfo", "degree_info", "verdict_text",
]
