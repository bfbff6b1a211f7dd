import os
import random
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from gtm import kernel
from gtm.core import lift_input, run

from randmachines import random_finite_machine, random_input


def test_fallback_always_available():
    assert "python" in kernel.BACKENDS
    assert kernel.default_backend.BACKEND in kernel.BACKENDS


def test_pure_python_forced_by_environment():
    env = dict(os.environ, GTM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c",
                          "from gtm import kernel; print(kernel.default_backend.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("name", sorted(kernel.BACKENDS))
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_backend_matches_reference_stepper(name, seed):
    m = random_finite_machine(seed, n_vertices=7)
    rng = random.Random(seed)
    f = lift_input(m, random_input(rng, m.graph.vertices()))
    ref = run(m, f, 200)
    got = kernel.CompiledMachine(m, kernel.BACKENDS[name]).run(f, max_steps=200)
    assert got.verdict == ref.verdict
    assert got.configs == ref.configs
    key = lambda e: (e[0], str(e[1]), e[2])  # noqa: E731
    assert sorted(got.catch_all_fired, key=key) == sorted(ref.catch_all_fired, key=key)


def test_pack_roundtrip():
    m = random_finite_machine(11)
    cm = kernel.compiled(m)
    f = lift_input(m, {(0,): 1, (3,): 2})
    assert cm.unpack(*cm.pack(f)) == f


def test_compiled_is_cached_per_backend():
    m = random_finite_machine(12)
    assert kernel.compiled(m) is kernel.compiled(m)


def test_table_grows_past_initial_capacity():
    be = kernel.default_backend
    t = be.make_table(16)
    for i in range(200):
        be.table_insert(t, i, i * 7, i, i % 5, i % 3, i)
    assert len(t) == 200


def test_too_many_colors_not_packable():
    from gtm.embeddings import embed_pgds, random_boolean_network
    s = random_boolean_network(40, random.Random(0))
    m, _ = embed_pgds(s)
    assert not kernel.fits(m)
