"""Pure-Python/numpy fallback with the same API as the compiled ``_kernel``."""
import numpy as np

BACKEND = "python"


class Table:
    def __init__(self, capacity=1024):
        self.d = {}

    def __len__(self):
        return len(self.d)


def make_table(capacity=1024):
    return Table(capacity)


def table_insert(t, recv, meta, emit, sym, st, rule):
    t.d[(int(recv), int(meta))] = (int(emit), int(sym), int(st), int(rule))


def receive(in_indptr, in_src, in_mask, emit):
    n = len(in_indptr) - 1
    out = np.zeros(n, dtype=np.uint64)
    if len(in_src) == 0:
        return out
    contrib = emit[in_src] & in_mask
    nonempty = in_indptr[1:] > in_indptr[:-1]
    starts = in_indptr[:-1][nonempty]
    out[nonempty] = np.bitwise_or.reduceat(contrib, starts)
    return out


def table_apply(t, meta, recv, out_emit, out_sym, out_st, out_rule):
    d = t.d
    miss = []
    for v, key in enumerate(zip(recv.tolist(), meta.tolist())):
        hit = d.get(key)
        if hit is None:
            miss.append(v)
        else:
            out_emit[v], out_sym[v], out_st[v], out_rule[v] = hit
    return np.asarray(miss, dtype=np.int64)


def pack_meta(label, sym, st):
    return ((label.astype(np.uint64) << np.uint64(42)) | (sym.astype(np.uint64) << np.uint64(21))
            | st.astype(np.uint64))
