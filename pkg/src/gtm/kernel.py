"""Dense finite-machine runner on top of the step kernels.

The compiled extension ``gtm._kernel`` is used when it imports; otherwise the
numpy fallback ``gtm._kernel_py`` is.  Set ``GTM_PURE_PYTHON=1`` to force the
fallback.
"""
from __future__ import annotations

import os
import weakref

import numpy as np

from . import _kernel_py
from .core import (EMPTY, BudgetExhausted, Configuration, GraphMachine, GraphMachineError,
                   Halted, NonHalting, RunTrace)

if os.environ.get("GTM_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernel as _compiled
    except ImportError:  # extension not built
        _compiled = None

default_backend = _compiled if _compiled is not None else _kernel_py
BACKENDS = {"python": _kernel_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

MAX_COLORS = 64


class CompiledMachine:
    """A finite graph machine packed into index arrays."""

    def __init__(self, m: GraphMachine, backend=None):
        g = m.graph
        if not g.finite:
            raise GraphMachineError("CompiledMachine needs a finite graph")
        self.m = m
        self.backend = backend or default_backend
        self.verts = list(g.vertices())
        self.index = {v: i for i, v in enumerate(self.verts)}
        colors = sorted(set().union(*g.gamma.values()) if g.gamma else set())
        if len(colors) > MAX_COLORS:
            raise GraphMachineError(f"{len(colors)} colors exceed the {MAX_COLORS}-bit mask")
        self.colors = colors
        self.cbit = {c: 1 << i for i, c in enumerate(colors)}
        self.labels = sorted(g.labels())
        self.lidx = {lab: i for i, lab in enumerate(self.labels)}
        self.symbols = list(m.alphabet)
        self.sidx = {z: i for i, z in enumerate(self.symbols)}
        self.states = sorted(m.states)
        self.tidx = {t: i for i, t in enumerate(self.states)}
        n = len(self.verts)
        indptr = np.zeros(n + 1, dtype=np.int64)
        src, mask = [], []
        for i, v in enumerate(self.verts):
            ins = sorted(((self.index[w], self.mask_of(cs)) for w, cs in g.in_edges(v)))
            for w, mk in ins:
                src.append(w)
                mask.append(mk)
            indptr[i + 1] = len(src)
        self.in_indptr = indptr
        self.in_src = np.asarray(src, dtype=np.int64)
        self.in_mask = np.asarray(mask, dtype=np.uint64)
        self.label_arr = np.asarray([self.lidx[g.label(v)] for v in self.verts], dtype=np.int32)
        self.table = self.backend.make_table(4096)
        self.catch_rules = np.asarray([r.catch_all for r in m.rules] + [False], dtype=bool)

    def mask_of(self, cs) -> int:
        out = 0
        for c in cs:
            out |= self.cbit[c]
        return out

    def colors_of(self, mk: int) -> frozenset:
        return frozenset(c for c in self.colors if self.cbit[c] & mk)

    def pack(self, f: Configuration):
        n = len(self.verts)
        emit = np.zeros(n, dtype=np.uint64)
        sym = np.full(n, self.sidx[0], dtype=np.int32)
        st = np.full(n, self.tidx[self.m.initial], dtype=np.int32)
        for v, (e, z, t) in f.items():
            i = self.index[v]
            emit[i] = self.mask_of(e)
            sym[i] = self.sidx[z]
            st[i] = self.tidx[t]
        return emit, sym, st

    def unpack(self, emit, sym, st) -> Configuration:
        q_sym, q_st = self.sidx[0], self.tidx[self.m.initial]
        nz = np.nonzero((emit != 0) | (sym != q_sym) | (st != q_st))[0]
        cells = {}
        for i in nz.tolist():
            cells[self.verts[i]] = (self.colors_of(int(emit[i])), self.symbols[sym[i]],
                                    self.states[st[i]])
        return Configuration(self.m.initial, cells)

    def step_arrays(self, emit, sym, st):
        b = self.backend
        recv = b.receive(self.in_indptr, self.in_src, self.in_mask, emit)
        meta = b.pack_meta(self.label_arr, sym, st)
        n = len(self.verts)
        o_emit = np.empty(n, dtype=np.uint64)
        o_sym = np.empty(n, dtype=np.int32)
        o_st = np.empty(n, dtype=np.int32)
        o_rule = np.empty(n, dtype=np.int32)
        miss = b.table_apply(self.table, meta, recv, o_emit, o_sym, o_st, o_rule)
        if len(miss):
            for i in miss.tolist():
                r, mt = int(recv[i]), int(meta[i])
                X = self.colors_of(r)
                lab = self.labels[int(self.label_arr[i])]
                (e, z, t), idx = self.m.lookup(lab, X, self.symbols[sym[i]], self.states[st[i]])
                if idx is None:
                    raise GraphMachineError(f"no rule matches at {self.verts[i]}")
                b.table_insert(self.table, r, mt, self.mask_of(e), self.sidx[z], self.tidx[t],
                               len(self.m.rules) if idx < 0 else idx)
            miss = b.table_apply(self.table, meta, recv, o_emit, o_sym, o_st, o_rule)
            assert len(miss) == 0
        return o_emit, o_sym, o_st, o_rule

    def run(self, f: Configuration, max_steps: int | None = None, keep_trace: bool = True) -> RunTrace:
        """Run to a fixed point or a repeated configuration.

        With ``max_steps=None`` the run always terminates (the configuration
        space is finite) with ``Halted`` or ``NonHalting``.
        """
        emit, sym, st = self.pack(f)
        configs = [f]
        seen = {self._key(emit, sym, st): 0}
        fired = []
        n = 0
        while True:
            o_emit, o_sym, o_st, o_rule = self.step_arrays(emit, sym, st)
            hits = np.nonzero(self.catch_rules[o_rule])[0]
            for i in hits.tolist():
                fired.append((n + 1, self.verts[i], self.m.rules[o_rule[i]].name))
            if (np.array_equal(o_emit, emit) and np.array_equal(o_sym, sym)
                    and np.array_equal(o_st, st)):
                if not keep_trace:
                    configs = [self.unpack(emit, sym, st)]
                return RunTrace(configs, Halted(n), fired)
            if max_steps is not None and n == max_steps:
                return RunTrace(configs, BudgetExhausted(max_steps), fired)
            emit, sym, st = o_emit, o_sym, o_st
            n += 1
            if keep_trace:
                configs.append(self.unpack(emit, sym, st))
            key = self._key(emit, sym, st)
            prev = seen.get(key)
            if prev is not None:
                if not keep_trace:
                    configs = [self.unpack(emit, sym, st)]
                return RunTrace(configs, NonHalting(prev, n - prev), fired)
            seen[key] = n

    @staticmethod
    def _key(emit, sym, st) -> bytes:
        # exact bytes as dict key: hash lookup plus full equality on collision
        return emit.tobytes() + sym.tobytes() + st.tobytes()


_compiled_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def compiled(m: GraphMachine, backend=None) -> CompiledMachine:
    per = _compiled_cache.setdefault(m, {})
    name = getattr(backend or default_backend, "BACKEND")
    hit = per.get(name)
    if hit is None:
        hit = per[name] = CompiledMachine(m, backend)
    return hit


def fits(m: GraphMachine) -> bool:
    """Whether the kernel can pack ``m`` (finite graph, at most 64 colors)."""
    g = m.graph
    if not g.finite:
        return False
    return len(set().union(*g.gamma.values()) if g.gamma else ()) <= MAX_COLORS
