"""Compare the compiled and pure-Python step kernels.

    python benchmarks/bench_kernel.py [--repeat 5]

Each workload is run to its verdict on a fresh CompiledMachine (so the memo
table starts cold) and then again on a warm one.
"""
import argparse
import random
import time

from gtm import kernel
from gtm.constructions import (AlternationTable, LimitTable, build_alternation_machine,
                               build_iterated_limit_machine, build_nx, star)
from gtm.core import lift_input
from gtm.embeddings import embed_pgds, pgds_input, random_boolean_network


def workloads():
    rng = random.Random(7)
    t = LimitTable(2, 0, lambda c: (c[0] + c[1]) % 2, 24)
    yield "iterated_limit n=2 N=24", build_iterated_limit_machine(t), {star(0): 1}
    seqs = {m: [rng.randint(0, 1) for _ in range(40)] for m in range(200)}
    Y = {(n, m): seqs[m][n] for m in seqs for n in range(40)}
    nx = build_nx(Y, range(200), 40)
    yield "nx 200 columns", nx, {(0, m): 1 for m in range(0, 200, 3)}
    seq = [(i // 3) % 2 for i in range(300)]
    yield "alternation k=99", build_alternation_machine(AlternationTable(seq)), {(0,): 1}
    s = random_boolean_network(30, rng)
    m, _ = embed_pgds(s)
    yield "boolean network 30", m, pgds_input(s, {v: rng.randint(0, 1) for v in s.vertices})


def timed(m, f, backend, warm):
    cm = kernel.CompiledMachine(m, backend)
    if warm:
        cm.run(f, max_steps=300, keep_trace=False)
    t0 = time.perf_counter()
    tr = cm.run(f, max_steps=300, keep_trace=False)
    return time.perf_counter() - t0, tr.verdict


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = list(kernel.BACKENDS)
    print(f"backends: {', '.join(names)} (default {kernel.default_backend.BACKEND})")
    print(f"{'workload':28} {'backend':8} {'cold s':>9} {'warm s':>9}  verdict")
    for label, m, x in workloads():
        f = lift_input(m, x)
        verdicts = set()
        for name in names:
            be = kernel.BACKENDS[name]
            cold = min(timed(m, f, be, False)[0] for _ in range(args.repeat))
            warm, v = min(timed(m, f, be, True) for _ in range(args.repeat))
            verdicts.add(repr(v))
            print(f"{label:28} {name:8} {cold:9.4f} {warm:9.4f}  {v}")
        if len(verdicts) != 1:
            raise SystemExit(f"backends disagree on {label}: {verdicts}")


if __name__ == "__main__":
    main()
