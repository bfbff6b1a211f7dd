# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled step kernels for finite graph machines.

Vertices are dense indices, colors are bits of a uint64 mask, and the lookup
table is memoized in an open-addressing hash keyed by
``(received mask, label/symbol/state meta word)``.  Misses are reported
back to Python, which evaluates the rule list and inserts the result.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int32_t, int64_t

cnp.import_array()

BACKEND = "cython"


cdef inline uint64_t _mix(uint64_t a, uint64_t b) nogil:
    cdef uint64_t z = a * <uint64_t>0x9E3779B97F4A7C15ULL + b
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef class Table:
    cdef public cnp.ndarray k_recv, k_meta, v_emit, v_sym, v_st, v_rule, used
    cdef public int64_t size, count

    def __init__(self, int64_t capacity=1024):
        cdef int64_t cap = 16
        while cap < capacity:
            cap <<= 1
        self.size = cap
        self.count = 0
        self.k_recv = np.zeros(cap, dtype=np.uint64)
        self.k_meta = np.zeros(cap, dtype=np.uint64)
        self.v_emit = np.zeros(cap, dtype=np.uint64)
        self.v_sym = np.zeros(cap, dtype=np.int32)
        self.v_st = np.zeros(cap, dtype=np.int32)
        self.v_rule = np.zeros(cap, dtype=np.int32)
        self.used = np.zeros(cap, dtype=np.uint8)

    def __len__(self):
        return self.count


def make_table(capacity=1024):
    return Table(capacity)


cdef void _insert(Table t, uint64_t r, uint64_t m, uint64_t e, int32_t s, int32_t st, int32_t ru):
    cdef uint64_t[:] kr = t.k_recv
    cdef uint64_t[:] km = t.k_meta
    cdef unsigned char[:] used = t.used
    cdef uint64_t[:] ve = t.v_emit
    cdef int32_t[:] vs = t.v_sym
    cdef int32_t[:] vst = t.v_st
    cdef int32_t[:] vr = t.v_rule
    cdef uint64_t mask = <uint64_t>(t.size - 1)
    cdef uint64_t i = _mix(r, m) & mask
    while used[i]:
        if kr[i] == r and km[i] == m:
            break
        i = (i + 1) & mask
    if not used[i]:
        t.count += 1
    used[i] = 1
    kr[i] = r
    km[i] = m
    ve[i] = e
    vs[i] = s
    vst[i] = st
    vr[i] = ru


def table_insert(Table t, uint64_t recv, uint64_t meta, uint64_t emit, int sym, int st, int rule):
    if 2 * (t.count + 1) > t.size:
        _grow(t)
    _insert(t, recv, meta, emit, sym, st, rule)


cdef void _grow(Table t):
    cdef cnp.ndarray kr = t.k_recv, km = t.k_meta, ve = t.v_emit
    cdef cnp.ndarray vs = t.v_sym, vst = t.v_st, vr = t.v_rule, u = t.used
    cdef int64_t old = t.size, j
    t.size = old * 2
    t.count = 0
    t.k_recv = np.zeros(t.size, dtype=np.uint64)
    t.k_meta = np.zeros(t.size, dtype=np.uint64)
    t.v_emit = np.zeros(t.size, dtype=np.uint64)
    t.v_sym = np.zeros(t.size, dtype=np.int32)
    t.v_st = np.zeros(t.size, dtype=np.int32)
    t.v_rule = np.zeros(t.size, dtype=np.int32)
    t.used = np.zeros(t.size, dtype=np.uint8)
    for j in range(old):
        if u[j]:
            _insert(t, kr[j], km[j], ve[j], vs[j], vst[j], vr[j])


def receive(const int64_t[:] in_indptr, const int64_t[:] in_src, const uint64_t[:] in_mask,
            const uint64_t[:] emit):
    """recv[v] = OR over in-edges (u -> v) of emit[u] & mask."""
    cdef Py_ssize_t n = in_indptr.shape[0] - 1, v, j
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.zeros(n, dtype=np.uint64)
    cdef uint64_t[:] o = out
    cdef uint64_t acc
    with nogil:
        for v in range(n):
            acc = 0
            for j in range(in_indptr[v], in_indptr[v + 1]):
                acc |= emit[in_src[j]] & in_mask[j]
            o[v] = acc
    return out


def table_apply(Table t, const uint64_t[:] meta, const uint64_t[:] recv,
                uint64_t[:] out_emit, int32_t[:] out_sym, int32_t[:] out_st, int32_t[:] out_rule):
    """Fill outputs from the memo table; return indices of vertices whose
    key is missing."""
    cdef Py_ssize_t n = meta.shape[0], v, nmiss = 0
    cdef uint64_t mask = <uint64_t>(t.size - 1), i, r, m
    cdef uint64_t[:] kr = t.k_recv
    cdef uint64_t[:] km = t.k_meta
    cdef unsigned char[:] used = t.used
    cdef uint64_t[:] ve = t.v_emit
    cdef int32_t[:] vs = t.v_sym
    cdef int32_t[:] vst = t.v_st
    cdef int32_t[:] vr = t.v_rule
    cdef cnp.ndarray[cnp.int64_t, ndim=1] miss = np.empty(n, dtype=np.int64)
    cdef int64_t[:] mv = miss
    with nogil:
        for v in range(n):
            r = recv[v]
            m = meta[v]
            i = _mix(r, m) & mask
            while used[i] and not (kr[i] == r and km[i] == m):
                i = (i + 1) & mask
            if used[i]:
                out_emit[v] = ve[i]
                out_sym[v] = vs[i]
                out_st[v] = vst[i]
                out_rule[v] = vr[i]
            else:
                mv[nmiss] = v
                nmiss += 1
    return miss[:nmiss]


def pack_meta(const int32_t[:] label, const int32_t[:] sym, const int32_t[:] st):
    cdef Py_ssize_t n = label.shape[0], v
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[:] o = out
    with nogil:
        for v in range(n):
            o[v] = (<uint64_t>label[v] << 42) | (<uint64_t>sym[v] << 21) | <uint64_t>st[v]
    return out
