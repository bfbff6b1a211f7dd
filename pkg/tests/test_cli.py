import io
import json

import pytest
import yaml

from gtm import cli
from gtm.core import FiniteGraph, GraphMachine, rule
from gtm.document import MachineDocument, dumps, loads, parse_trace_record
from gtm.embeddings import CaRule, embed_ca

from test_embeddings import ca_oracle


def call(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def build_doc(tmp_path, name, *params, fname=None):
    code, text = call("build", name, *params)
    assert code == 0
    p = tmp_path / (fname or f"{name}.yaml")
    p.write_text(text)
    return p


def ping_pong_doc(tmp_path):
    vs = [(0,), (1,)]
    g = FiniteGraph(vs, {v: "p" for v in vs}, {"p": {"x"}}, {((0,), (1,)): {"x"},
                                                           ((1,), (0,)): {"x"}})
    m = GraphMachine(g, (0, 1), ("s",), "s", {"p": ("s",)},
                     [rule(states="s", symbols=1, emit=["x"], symbol=0),
                      rule(has=["x"], emit=["x"]), rule()], name="ping-pong")
    p = tmp_path / "pp.yaml"
    p.write_text(dumps(MachineDocument(m, {(0,): 1})))
    return p


def verdict(text):
    return [ln for ln in text.splitlines() if ln.startswith("verdict:")][0]


def output(text):
    line = [ln for ln in text.splitlines() if ln.startswith("output:")][0]
    return json.loads(line[len("output:"):])


@pytest.mark.parametrize("name,params", [
    ("limit", ["--N", "4"]),
    ("broadcaster", ["--n", "1"]),
    ("iterated_limit", ["--n", "1", "--N", "5", "--seed", "3"]),
    ("alternation", ["--seq", "01101"]),
    ("nx", []),
    ("omega", ["--n_max", "1", "--N", "3"]),
    ("pgds", ["--size", "5", "--seed", "2"]),
    ("driver", []),
])
def test_finite_documents_round_trip(name, params):
    code, text = call("build", name, *params)
    assert code == 0 and text.startswith("format: 1\n")
    doc = loads(text, cli.builtin_graph)
    again = dumps(MachineDocument(doc.machine, doc.input, doc.inputs, doc.options, doc.builtin))
    assert again == text
    m = cli.build(name, cli._parse_params(params)).machine
    g, h = m.graph, doc.machine.graph
    assert set(g.vertices()) == set(h.vertices())
    assert all(g.label(v) == h.label(v) and dict(g.out_edges(v)) == dict(h.out_edges(v))
               for v in g.vertices())
    assert doc.machine.rules == m.rules


@pytest.mark.parametrize("name,params", [
    ("tm", ["--input", "0111"]), ("ca", ["--rule", "90", "--window", "16"]),
    ("symmetrize", ["--base", "tm", "--input", "01"]),
])
def test_builtin_documents_round_trip(name, params):
    code, text = call("build", name, *params)
    assert code == 0
    assert "kind: builtin" in text
    assert dumps(loads(text, cli.builtin_graph)) == text


def test_run_is_deterministic(tmp_path):
    p = build_doc(tmp_path, "alternation", "--seq", "0110")
    a, b = call("run", str(p), "--trace"), call("run", str(p), "--trace")
    assert a == b and a[0] == 0


def test_exit_codes(tmp_path):
    p = build_doc(tmp_path, "alternation", "--seq", "01010")
    assert call("run", str(p))[0] == cli.EXIT_HALTED
    assert call("run", str(p), "--max-steps", "2")[0] == cli.EXIT_BUDGET
    assert call("run", str(ping_pong_doc(tmp_path)))[0] == cli.EXIT_NONHALTING
    bad = tmp_path / "bad.yaml"
    bad.write_text("format: 1\nname: x\nbogus: 1\n")
    assert call("run", str(bad))[0] == cli.EXIT_ERROR
    assert call("run", str(tmp_path / "missing.yaml"))[0] == cli.EXIT_ERROR


def test_ping_pong_reports_cycle(tmp_path):
    code, text = call("run", str(ping_pong_doc(tmp_path)))
    assert code == 3
    assert verdict(text) == "verdict: nonhalting: cycle from stage 1 with period 2"


def test_empty_input_halts_immediately(tmp_path):
    p = build_doc(tmp_path, "alternation", "--seq", "01")
    d = yaml.safe_load(p.read_text())
    d["input"] = {}
    p.write_text(yaml.safe_dump(d))
    code, text = call("run", str(p))
    assert code == 0 and verdict(text) == "verdict: halted at stage 0"
    assert output(text) == {}


@pytest.mark.parametrize("rows,k", [("0011,0101", 3), ("1111,1010", 3), ("0110,0000", 2)])
def test_nx_column_input(tmp_path, rows, k):
    p = build_doc(tmp_path, "nx", "--rows", rows)
    d = yaml.safe_load(p.read_text())
    cols = rows.split(",")
    for j in range(len(cols)):
        d["input"] = {f"[0,{j}]": 1}
        p.write_text(yaml.safe_dump(d))
        code, text = call("run", str(p))
        seq = [int(ch) for ch in cols[j]]
        alts = sum(a != b for a, b in zip(seq, seq[1:]))
        stage = int(verdict(text).rsplit(" ", 1)[1])
        assert code == 0 and stage <= 2 * alts + 4 <= 2 * k + 4
        assert output(text) == ({f"[0,{j}]": 1} if seq[-1] else {})


def test_alternation_document_degree(tmp_path):
    p = build_doc(tmp_path, "alternation", "--seq", "0110100")
    doc = cli.load(str(p))
    g = doc.machine.graph
    deg = {v: 0 for v in g.vertices()}
    for v in g.vertices():
        for w, _ in g.out_edges(v):
            deg[v] += 1
            deg[w] += 1
    assert max(deg.values()) <= 3


def test_ca_document_matches_direct_evolution(tmp_path):
    p = build_doc(tmp_path, "ca", "--rule", "110", "--window", "32", "--input", "1")
    code, text = call("run", str(p), "--trace", "--max-steps", "31")
    assert code == 2
    _, corr = embed_ca(CaRule.wolfram(110), 32)
    doc = cli.load(str(p))
    recs = [parse_trace_record(ln, doc.machine.initial) for ln in text.splitlines()
            if ln.startswith("{")]
    ref = ca_oracle(110, [0], 30, -16, 32)
    for t in range(31):
        stage, f = recs[corr.stage(t)]
        assert stage == corr.stage(t)
        assert corr.project(f) == ref[t]


def test_trace_records_round_trip(tmp_path):
    p = build_doc(tmp_path, "iterated_limit", "--n", "1", "--N", "4")
    code, text = call("run", str(p), "--trace")
    doc = cli.load(str(p))
    from gtm.core import lift_input, run
    tr = run(doc.machine, lift_input(doc.machine, doc.input), 1000)
    recs = [parse_trace_record(ln, doc.machine.initial) for ln in text.splitlines()
            if ln.startswith("{")]
    assert [f for _, f in recs] == tr.configs
    assert [k for k, _ in recs] == list(range(len(tr.configs)))


def test_verify_bounds(tmp_path):
    p = build_doc(tmp_path, "nx", "--rows", "0011,0101")
    assert call("verify", str(p), "--constant-time", "10")[0] == 0
    assert call("verify", str(p), "--constant-time", "9")[0] == cli.EXIT_CHECK_FAILED
    code, text = call("verify", str(p), "--linear-space", "6561,0")
    assert code == 0 and text.rstrip().endswith("verdict: pass")
    assert call("verify", str(p), "--gx", "0=0")[0] == 0
    t = build_doc(tmp_path, "tm", "--input", "")
    assert call("verify", str(t), "--constant-time", "1")[0] == cli.EXIT_CHECK_FAILED


def test_budget_from_environment(tmp_path, monkeypatch):
    p = build_doc(tmp_path, "alternation", "--seq", "01010")
    monkeypatch.setenv("GTM_MAX_STEPS", "3")
    assert call("run", str(p))[0] == cli.EXIT_BUDGET
    assert call("run", str(p), "--max-steps", "100")[0] == cli.EXIT_HALTED


def test_unknown_keys_rejected(tmp_path):
    p = build_doc(tmp_path, "limit", "--N", "3")
    d = yaml.safe_load(p.read_text())
    d["machine"]["extra"] = True
    p.write_text(yaml.safe_dump(d))
    assert call("run", str(p))[0] == cli.EXIT_ERROR
    assert call("build", "nope")[0] == cli.EXIT_ERROR
    assert call("build", "limit", "--bogus", "1")[0] == cli.EXIT_ERROR


def test_validate_command(tmp_path):
    p = build_doc(tmp_path, "alternation", "--seq", "010")
    code, text = call("validate", str(p))
    assert code == 0 and "valid: true" in text
