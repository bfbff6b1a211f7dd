import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from gtm.core import Halted, UnsupportedDimension, lift_input, run, validate_machine
from gtm.embeddings import (CaRule, TmProgram, binary_increment, decode_binary, embed_ca,
                            embed_pgds, embed_tm, encode_binary, is_symmetric, pgds_input,
                            random_boolean_network, split_relay, symmetrize, tm_input,
                            unary_successor)

from randmachines import random_finite_machine, random_input


def simulate(delta, halt, start, tape, limit=500):
    """Plain list-tape TM, independent of TmProgram.run."""
    cells = [tape.get(i, 0) for i in range(max(tape, default=-1) + 1)]
    h, q, hist = 0, start, []
    while True:
        hist.append(({i: a for i, a in enumerate(cells) if a}, h, q))
        if q in halt or len(hist) > limit:
            return hist
        while h >= len(cells):
            cells.append(0)
        q2, a2, mv = delta[(q, cells[h])]
        cells[h] = a2
        q = q2
        h = h + 1 if mv == "R" else (max(h - 1, 0) if mv == "L" else h)


def lockstep(p: TmProgram, tape):
    m, corr = embed_tm(p)
    ref = simulate(p.delta, p.halt, p.start, tape)
    tr = run(m, lift_input(m, tm_input(tape)), corr.stage(len(ref)) + 2)
    assert tr.halted
    for t, conf in enumerate(ref):
        assert corr.project(tr.configs[corr.stage(t)]) == conf
    assert corr.project(tr.final) == ref[-1]
    return tr, ref


def test_binary_increment_example():
    tr, ref = lockstep(binary_increment(), encode_binary("011"))
    assert decode_binary(corr_tape(tr)) == "100"


def corr_tape(tr):
    return {v[0]: z for v, z in tr.final.displayed().items() if v[0] >= 0}


@pytest.mark.parametrize("bits", ["".join(b) for n in range(5) for b in itertools.product("01", repeat=n)])
def test_binary_increment_short_inputs(bits):
    tr, ref = lockstep(binary_increment(), encode_binary(bits))
    want = bin(int(bits or "0", 2) + 1)[2:]
    assert decode_binary(corr_tape(tr)).lstrip("0") == want


def test_unary_successor():
    tr, _ = lockstep(unary_successor(), {i: 1 for i in range(5)})
    assert corr_tape(tr) == {i: 1 for i in range(6)}


def test_left_move_on_first_cell_stays():
    d = {("go", 0): ("back", 1, "L"), ("go", 1): ("back", 1, "L"),
         ("back", 1): ("end", 1, "R"), ("back", 0): ("end", 0, "R")}
    p = TmProgram(("go", "back", "end"), "go", {"end"}, (0, 1), d)
    tr, ref = lockstep(p, {})
    assert ref[-1] == ({0: 1}, 1, "end")


def test_tm_blank_tape_without_head_is_idle():
    m, _ = embed_tm(binary_increment())
    assert run(m, lift_input(m, {}), 5).verdict == Halted(0)


def test_tm_program_must_be_total():
    with pytest.raises(ValueError):
        TmProgram(("a", "h"), "a", {"h"}, (0, 1), {("a", 0): ("h", 0, "S")})


def ca_oracle(number, seed_cells, steps, lo, width):
    """Direct evolution of a radius-1 binary CA on a list wide enough that
    the boundary is never reached."""
    pad = steps + 2
    left = lo - pad
    row = [0] * (width + 2 * pad)
    for i in seed_cells:
        row[i - left] = 1
    out = [tuple(row[pad:pad + width])]
    for _ in range(steps):
        nxt = [0] * len(row)
        for i in range(1, len(row) - 1):
            k = row[i - 1] * 4 + row[i] * 2 + row[i + 1]
            nxt[i] = (number >> k) & 1
        row = nxt
        out.append(tuple(row[pad:pad + width]))
    return out


@pytest.mark.parametrize("number", [110, 30, 90])
def test_ca_matches_direct_evolution(number):
    m, corr = embed_ca(CaRule.wolfram(number), 32)
    steps = 30
    tr = run(m, lift_input(m, {(0,): 1}), corr.stage(steps), detect_cycles=False)
    ref = ca_oracle(number, [0], steps, -16, 32)
    for t in range(steps + 1):
        assert corr.project(tr.configs[corr.stage(t)]) == ref[t]


def test_ca_two_dimensions_unsupported():
    with pytest.raises(UnsupportedDimension):
        CaRule(1, 2, {(0, 0, 0): 0}, dimension=2)


def test_ca_quiescent_neighborhood_must_stay_quiet():
    with pytest.raises(ValueError):
        CaRule.wolfram(1)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_pgds_matches_direct_iteration(seed):
    rng = random.Random(seed)
    s = random_boolean_network(rng.randint(1, 8), rng)
    m, corr = embed_pgds(s)
    x = {v: rng.randint(0, 1) for v in s.vertices}
    tr = run(m, lift_input(m, pgds_input(s, x)), corr.stage(12), detect_cycles=False)
    cur = dict(x)
    for t in range(13):
        k = min(corr.stage(t), len(tr.configs) - 1)
        assert corr.project(tr.configs[k]) == cur
        cur = {v: s.update[v](cur[v], tuple(cur[u] for u in s.in_neighbors[v]))
               for v in s.vertices}


def test_embedded_tables_validate():
    for m in (embed_pgds(random_boolean_network(4, random.Random(1)))[0],):
        assert validate_machine(m).ok


def sym_lockstep(m, x, T):
    sm, corr = symmetrize(m)
    tr = run(m, lift_input(m, x), T, detect_cycles=False)
    st_ = run(sm, lift_input(sm, x), 3 * T, detect_cycles=False)
    for t in range(len(tr.configs)):
        k = corr.stage(t)
        assert k < len(st_.configs) or st_.halted
        assert corr.project(st_.configs[min(k, len(st_.configs) - 1)]) == tr.configs[t]
    return sm


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_symmetrization_random(seed):
    m = random_finite_machine(seed, n_vertices=5)
    x = random_input(random.Random(seed), m.graph.vertices())
    sm = sym_lockstep(m, x, 20)
    assert is_symmetric(sm.graph)


def test_symmetrization_handles_self_loops():
    from gtm.constructions import ROOT, DriverSpec, attach_driver, build_limit_machine, driver_vertex
    import gtm.constructions as C
    m = attach_driver(build_limit_machine(4), DriverSpec(ROOT, C.A, 1))
    sym_lockstep(m, {driver_vertex(0): 1, (3,): 1}, 10)


def test_symmetrization_of_infinite_tm():
    m, _ = embed_tm(binary_increment())
    sm = sym_lockstep(m, tm_input(encode_binary("0111")), 20)
    verts = [(i,) for i in range(-1, 6)]
    seen = set(verts)
    for v in verts:
        seen.update(w for w, _ in sm.graph.out_edges(v))
    assert is_symmetric(sm.graph, seen)
    assert split_relay(("e*", 0, "->", 1)) == ((0,), (1,), True)
