"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
with its wall time.  The lines are repeated in the terminal summary."""
import functools
import itertools
import random
import time
from contextlib import contextmanager

import pytest

import gtm.constructions as C
from gtm import cli
from gtm.constructions import (LimitTable, build_alternation_machine, build_iterated_limit_machine,
                               build_nx, build_omega_machine, star)
from gtm.core import lift_input, restrict, run, validate_machine
from gtm.embeddings import (CaRule, binary_increment, embed_ca, embed_pgds, embed_tm,
                            encode_binary, is_symmetric, pgds_input, random_boolean_network,
                            symmetrize, tm_input, unary_successor)
from gtm.engine import (check_approximation_chain, check_linear_space, degree_info, neighborhood,
                        run_finite, run_finite_degree)

from randmachines import random_finite_machine, random_input, random_line_machine
from test_constructions import alternations, nested_limit, tail_value
from test_embeddings import ca_oracle, simulate

RESULTS: dict = {}


@contextmanager
def criterion(n: int, title: str, limit: float):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        dt = time.perf_counter() - t0
        RESULTS[n] = f"criterion {n:2d} FAIL {title} ({dt:.2f}s): {str(exc).splitlines()[0]}"
        print(RESULTS[n])
        raise
    dt = time.perf_counter() - t0
    ok = dt < limit
    RESULTS[n] = (f"criterion {n:2d} {'PASS' if ok else 'FAIL'} {title} ({dt:.2f}s"
                  f"{'' if ok else f' > {limit}s'})")
    print(RESULTS[n])
    assert ok, RESULTS[n]


def at(tr, k):
    return tr.configs[min(k, len(tr.configs) - 1)]


# shared runs for the catch-all sentinel


@functools.lru_cache(maxsize=None)
def limit_runs():
    rng = random.Random(2024)
    out = []
    for i in range(25):
        n = 1 + i % 2
        N = 16
        table = {c: rng.randint(0, 1) for c in itertools.product(range(N), repeat=n)}
        m = build_iterated_limit_machine(LimitTable(n, 0, table, N))
        out.append((n, table, run_finite(m, {star(0): 1})))
    return out


def random_sequence(rng, k):
    """Binary sequence with exactly ``k`` alternations."""
    seq = [rng.randint(0, 1)]
    flips = set(rng.sample(range(1, 3 * k + 3), k))
    for i in range(1, 3 * k + 3):
        seq.append(1 - seq[-1] if i in flips else seq[-1])
    return seq


@functools.lru_cache(maxsize=None)
def alternation_runs():
    rng = random.Random(7)
    out = []
    for i in range(50):
        seq = random_sequence(rng, i % 6)
        m = build_alternation_machine(seq)
        out.append((seq, m, run_finite(m, {(0,): 1})))
    return out


def omega_family(n, e):
    return lambda c: (sum(c) * (e + 1) + len(c) + (c[-1] >= 5)) % 2


@functools.lru_cache(maxsize=None)
def omega_runs():
    es = (0, 1, 2)
    m = build_omega_machine(2, es, 8, omega_family)
    out = []
    for n in (1, 2):
        for e in es:
            solo = build_iterated_limit_machine(LimitTable(n, e, omega_family(n, e), 8))
            out.append(((n, e), m, run_finite(solo, {star(0): 1}),
                        run_finite(m, {star(0) + (n, e): 1})))
    return out


# criteria


def test_criterion_01_quiescence():
    with criterion(1, "empty input halts at stage 0", 1.0):
        for name in sorted(cli.BUILDERS):
            m = cli.build(name, {}).machine
            tr = run(m, lift_input(m, {}), 3)
            assert tr.halted and tr.verdict.stage == 0, name
        checked = 0
        seed = 0
        while checked < 100:
            m = random_finite_machine(seed)
            seed += 1
            if not validate_machine(m).ok:
                continue
            tr = run_finite(m, {})
            assert tr.halted and tr.verdict.stage == 0
            checked += 1


def test_criterion_02_constant_time_limit_machines():
    with criterion(2, "iterated limits halt within 5n+5 with the nested limit", 10.0):
        for n, table, tr in limit_runs():
            assert tr.final.symbol(star(0)) == nested_limit(table.__getitem__, n, 16)
        late = [(n, tr.verdict.stage) for n, _, tr in limit_runs()
                if not (tr.halted and tr.verdict.stage <= 5 * n + 5)]
        assert not late, (f"{len(late)}/25 runs exceed 5n+5; "
                          f"halting stages by n: {sorted(set(late))}")


def test_criterion_03_alternation_machines():
    with criterion(3, "alternation machines halt within 2k+4, degree <= 3", 5.0):
        for seq, m, tr in alternation_runs():
            k = alternations(seq)
            assert k <= 5
            assert tr.halted and tr.verdict.stage <= 2 * k + 4, (seq, tr.verdict)
            assert tr.final.symbol((0,)) == tail_value(seq)
            assert max(degree_info(m.graph).values.values()) <= 3


def test_criterion_04_linear_space():
    with criterion(4, "nx instances run in linear space 3^(2k+4)|A|", 10.0):
        rng = random.Random(4)
        for _ in range(6):
            k = rng.randint(0, 4)
            cols = [random_sequence(rng, rng.randint(0, k)) for _ in range(4)]
            cap = max(len(c) for c in cols)
            Y = {(n, j): col[min(n, len(col) - 1)] for j, col in enumerate(cols)
                 for n in range(cap)}
            m = build_nx(Y, range(len(cols)), cap)
            kmax = max(alternations(c) for c in cols)
            inputs = [{(0, j): 1} for j in range(len(cols))]
            rep = check_linear_space(m, inputs, (0, 2 * kmax + 4), (3 ** (2 * kmax + 4), 0))
            assert rep.passed, rep.lines()


def test_criterion_05_locality_and_composition():
    with criterion(5, "finite-degree engine agrees with restricted runs", 60.0):
        for seed in range(200):
            rng = random.Random(seed)
            m = random_line_machine(seed)
            x = {(i,): rng.choice((1, 2)) for i in range(rng.randint(1, 3))}
            k = rng.randint(0, 20)
            full = run_finite_degree(m, x, k)
            local = run_finite(restrict(m, neighborhood(m.graph, x, k)), x)
            fk, lk = at(full, k), at(local, k)
            assert all(fk[v] == lk[v] for v in x), seed
            n = rng.randint(0, 10)
            long = run(m, lift_input(m, x), n + k, detect_cycles=False)
            tail = run(m, at(long, n), k, detect_cycles=False)
            assert at(tail, k) == at(long, n + k), seed


def test_criterion_06_tm_bisimulation():
    with criterion(6, "TM embeddings track the reference simulator", 30.0):
        cases = [(binary_increment(), encode_binary("".join(b)))
                 for L in range(9) for b in itertools.product("01", repeat=L)]
        cases += [(unary_successor(), {i: 1 for i in range(L)}) for L in range(9)]
        for p, tape in cases:
            m, corr = embed_tm(p)
            ref = simulate(p.delta, p.halt, p.start, tape)
            tr = run(m, lift_input(m, tm_input(tape)), corr.stage(len(ref)) + 2)
            assert tr.halted
            for t, conf in enumerate(ref):
                assert corr.project(tr.configs[corr.stage(t)]) == conf, (tape, t)
            assert corr.project(tr.final) == ref[-1]


def test_criterion_07_ca_bisimulation():
    with criterion(7, "rule 110 embedding matches direct evolution", 10.0):
        m, corr = embed_ca(CaRule.wolfram(110), 64)
        tr = run(m, lift_input(m, {(0,): 1}), corr.stage(100), detect_cycles=False)
        ref = ca_oracle(110, [0], 100, -32, 64)
        for t in range(101):
            assert corr.project(tr.configs[corr.stage(t)]) == ref[t], t


def test_criterion_08_pgds_bisimulation():
    with criterion(8, "boolean network embeddings match direct iteration", 10.0):
        for seed in range(20):
            rng = random.Random(seed)
            s = random_boolean_network(rng.randint(1, 10), rng)
            m, corr = embed_pgds(s)
            x = {v: rng.randint(0, 1) for v in s.vertices}
            tr = run(m, lift_input(m, pgds_input(s, x)), corr.stage(20), detect_cycles=False)
            cur = dict(x)
            for t in range(21):
                assert corr.project(at(tr, corr.stage(t))) == cur, (seed, t)
                cur = {v: s.update[v](cur[v], tuple(cur[u] for u in s.in_neighbors[v]))
                       for v in s.vertices}


def _sym_check(m, x, T, region=None):
    sm, corr = symmetrize(m)
    tr = run(m, lift_input(m, x), T, detect_cycles=False)
    st = run(sm, lift_input(sm, x), corr.stage(T), detect_cycles=False)
    for t in range(T + 1):
        assert corr.project(at(st, corr.stage(t))) == at(tr, t), t
    return sm


def test_criterion_09_symmetrization():
    with criterion(9, "symmetrized machines are symmetric and track every third stage", 30.0):
        m, _ = embed_tm(binary_increment())
        sm = _sym_check(m, tm_input(encode_binary("01101")), 50)
        seen = {(i,) for i in range(-1, 40)}
        for v in list(seen):
            seen.update(w for w, _ in sm.graph.out_edges(v))
            seen.update(w for w, _ in sm.graph.in_edges(v))
        assert is_symmetric(sm.graph, seen)
        for seed in range(20):
            m = random_finite_machine(seed, n_vertices=5)
            x = random_input(random.Random(seed), m.graph.vertices())
            sm = _sym_check(m, x, 50)
            assert is_symmetric(sm.graph)
            for u in sm.graph.vertices():
                for w in sm.graph.vertices():
                    assert sm.graph.edge(u, w) == sm.graph.edge(w, u)


def test_criterion_10_omega_componentwise():
    with criterion(10, "omega machine components match standalone runs", 10.0):
        runs = omega_runs()
        m = runs[0][1]
        labels = {}
        for v in m.graph.vertices():
            labels.setdefault(v[-2:], set()).add(m.graph.label(v))
        assert len({frozenset(s) for s in labels.values()}) == 1
        for (n, e), _, solo, comp in runs:
            assert solo.verdict == comp.verdict
            assert comp.final.symbol(star(0) + (n, e)) == solo.final.symbol(star(0))
            assert {v[:-2]: z for v, z in comp.final.displayed().items()} == \
                solo.final.displayed()


def test_criterion_11_uniform_approximation():
    with criterion(11, "neighborhood chains are 1-approximations", 60.0):
        for seed in range(50):
            rng = random.Random(seed)
            m = random_line_machine(seed)
            f = lift_input(m, {(i,): rng.choice((1, 2)) for i in range(rng.randint(1, 3))})
            chain = [neighborhood(m.graph, f.support(), i) for i in range(6)]

            def supersets(i, B, rng=rng):
                lo = min(v[0] for v in B)
                hi = max(v[0] for v in B)
                out = []
                for _ in range(10):
                    extra = {(j,) for j in range(lo - rng.randint(1, 8), hi + rng.randint(1, 8))
                             if rng.random() < 0.7}
                    out.append(B | extra)
                return out
            assert all(check_approximation_chain(m, f, chain, supersets)), seed


def test_criterion_12_catch_all_sentinel():
    with criterion(12, "no catch-all rule fires in criteria 2, 3, 10", 60.0):
        fired = [tr.catch_all_fired for _, _, tr in limit_runs()]
        fired += [tr.catch_all_fired for _, _, tr in alternation_runs()]
        fired += [r.catch_all_fired for _, _, a, b in omega_runs() for r in (a, b)]
        assert len(fired) == 25 + 50 + 12
        assert not any(fired), [f for f in fired if f][:3]
