"""``gtm`` command line: build named constructions, run documents, verify
resource bounds.

Exit codes of ``run``: 0 halted, 3 proven nonhalting, 2 budget exhausted,
1 parse or validation error.  ``verify`` exits 0 when every check passes,
4 when a check fails and 1 on errors.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass
from typing import Callable, Optional

from . import constructions as C
from . import embeddings as E
from .core import (BudgetExhausted, GraphMachineError, Halted, NonHalting, lift_input, run,
                   validate_machine, vkey)
from .document import (DocumentError, MachineDocument, dumps, format_vertex, loads,
                       parse_vertex, trace_record)
from .engine import (DEFAULT_MAX_STEPS, check_constant_time, check_gx_computable,
                     check_linear_space, run_truncated, verdict_text)
from . import kernel

EXIT_HALTED, EXIT_ERROR, EXIT_BUDGET, EXIT_NONHALTING, EXIT_CHECK_FAILED = 0, 1, 2, 3, 4


def exit_code(verdict) -> int:
    if isinstance(verdict, Halted):
        return EXIT_HALTED
    if isinstance(verdict, NonHalting):
        return EXIT_NONHALTING
    return EXIT_BUDGET


# ---------------------------------------------------------------------------
# builders


@dataclass
class Built:
    machine: object
    input: dict
    inputs: Optional[list] = None
    options: Optional[dict] = None
    builtin: Optional[dict] = None


def _bits(s: str) -> list:
    s = str(s)
    if not s or any(ch not in "01" for ch in s):
        raise ValueError(f"expected a nonempty 0/1 string, got {s!r}")
    return [int(ch) for ch in s]


def _table(n: int, N: int, values: str, seed: int) -> dict:
    cells = list(C.LimitTable(n, 0, lambda c: 0, N).grid())
    if values:
        bits = _bits(values)
        if len(bits) != len(cells):
            raise ValueError(f"--values needs {len(cells)} bits, got {len(bits)}")
    else:
        rng = random.Random(seed)
        bits = [rng.randint(0, 1) for _ in cells]
    return dict(zip(cells, bits))


def b_limit(N=4):
    return Built(C.build_limit_machine(int(N)), {})


def b_broadcaster(n=1):
    n = int(n)
    return Built(C.build_broadcaster(n), {C.star(0): 1})


def b_iterated_limit(n=1, N=8, e=0, values="", seed=0):
    n, N = int(n), int(N)
    t = C.LimitTable(n, int(e), _table(n, N, values, int(seed)), N)
    return Built(C.build_iterated_limit_machine(t), {C.star(0): 1})


def b_alternation(seq="0011"):
    return Built(C.build_alternation_machine(_bits(seq)), {(0,): 1})


def b_nx(rows="0011,0101"):
    cols = [_bits(r) for r in str(rows).split(",")]
    cap = max(len(c) for c in cols)
    Y = {(n, m): col[min(n, len(col) - 1)] for m, col in enumerate(cols) for n in range(cap)}
    m = C.build_nx(Y, range(len(cols)), cap)
    family = [{(0, j): 1} for j in range(len(cols))]
    return Built(m, family[0], family)


def b_omega(n_max=1, e_set="0,1", N=4, seed=0):
    es = [int(x) for x in str(e_set).split(",")]

    def fam(n, e):
        rng = random.Random(f"{seed}:{n}:{e}")
        table = {c: rng.randint(0, 1) for c in C.LimitTable(n, e, lambda c: 0, int(N)).grid()}
        return table.__getitem__
    m = C.build_omega_machine(int(n_max), es, int(N), fam)
    return Built(m, {C.star(0) + (1, es[0]): 1})


TM_PROGRAMS = {"binary_increment": E.binary_increment, "unary_successor": E.unary_successor}


def b_tm(program="binary_increment", input="011"):
    if program not in TM_PROGRAMS:
        raise ValueError(f"unknown program {program!r}; choose from {sorted(TM_PROGRAMS)}")
    p = TM_PROGRAMS[program]()
    m, _ = E.embed_tm(p)
    s = "" if input in (None, "") else str(input)
    tape = E.encode_binary(s) if program == "binary_increment" else \
        {i: int(ch) for i, ch in enumerate(s) if ch != "0"}
    return Built(m, E.tm_input(tape), options={"max_steps": 1000},
                 builtin={"name": "tm", "params": {"program": program}})


def b_ca(rule=110, window=64, input="1"):
    ca = E.CaRule.wolfram(int(rule))
    m, _ = E.embed_ca(ca, int(window))
    cells = {(i,): 1 for i, ch in enumerate(str(input)) if ch == "1"}
    return Built(m, cells, options={"max_steps": 101},
                 builtin={"name": "ca", "params": {"rule": int(rule), "window": int(window)}})


def b_pgds(size=10, seed=0, input=""):
    rng = random.Random(int(seed))
    s = E.random_boolean_network(int(size), rng)
    m, _ = E.embed_pgds(s)
    bits = _bits(input) if input else [rng.randint(0, 1) for _ in s.vertices]
    x = E.pgds_input(s, dict(zip(s.vertices, bits)))
    return Built(m, x, options={"max_steps": 200})


def b_symmetrize(base="alternation", **params):
    if base in ("symmetrize", "driver"):
        raise ValueError(f"cannot symmetrize {base!r}")
    inner = build(base, params)
    sm, _ = E.symmetrize(inner.machine)
    builtin = None
    if inner.builtin is not None:
        builtin = {"name": "symmetrize", "params": {"base": base, **inner.builtin["params"]}}
    opts = dict(inner.options or {})
    if "max_steps" in opts:
        opts["max_steps"] *= 3
    return Built(sm, inner.input, inner.inputs, opts or None, builtin)


def b_driver(base="limit", target="[*]", color="A", fire=1, **params):
    if base in ("symmetrize", "driver"):
        raise ValueError(f"cannot attach a driver to {base!r}")
    inner = build(base, params)
    d = C.DriverSpec(parse_vertex(target), str(color), int(fire))
    m = C.attach_driver(inner.machine, d)
    x = dict(inner.input)
    x[C.driver_vertex(0)] = 1
    return Built(m, x)


BUILDERS: dict = {
    "limit": b_limit, "broadcaster": b_broadcaster, "iterated_limit": b_iterated_limit,
    "alternation": b_alternation, "nx": b_nx, "omega": b_omega, "tm": b_tm, "ca": b_ca,
    "pgds": b_pgds, "symmetrize": b_symmetrize, "driver": b_driver,
}


def build(name: str, params: dict) -> Built:
    if name not in BUILDERS:
        raise ValueError(f"unknown construction {name!r}; choose from {sorted(BUILDERS)}")
    try:
        return BUILDERS[name](**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name}: {exc}") from None


def builtin_graph(name: str, params: dict):
    if name not in ("tm", "ca", "symmetrize"):
        raise DocumentError(f"no builtin graph named {name!r}")
    try:
        return build(name, dict(params)).machine.graph
    except ValueError as exc:
        raise DocumentError(str(exc)) from None


def to_document(b: Built) -> MachineDocument:
    return MachineDocument(b.machine, b.input, b.inputs, dict(b.options or {}), b.builtin)


def load(path: str) -> MachineDocument:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), builtin_graph)


# ---------------------------------------------------------------------------
# commands


def _budget(flag: Optional[int], doc: MachineDocument) -> int:
    if flag is not None:
        return flag
    if doc.max_steps is not None:
        return int(doc.max_steps)
    env = os.environ.get("GTM_MAX_STEPS")
    return int(env) if env else DEFAULT_MAX_STEPS


def execute(doc: MachineDocument, engine: Optional[str], max_steps: int):
    m = doc.machine
    f = lift_input(m, doc.input)
    engine = engine or doc.engine
    if engine == "finite":
        if not m.graph.finite:
            raise GraphMachineError("engine 'finite' needs a finite graph")
        if not kernel.fits(m):
            return run(m, f, max_steps)
        return kernel.compiled(m).run(f, max_steps=max_steps)
    if engine == "finite_degree":
        return run(m, f, max_steps)
    if engine == "truncated":
        if "N" not in doc.options:
            raise DocumentError("engine 'truncated' needs options.N")
        return run_truncated(m, f, int(doc.options["N"]), max_steps)
    raise DocumentError(f"unknown engine {engine!r}")


def cmd_run(args, out) -> int:
    doc = load(args.document)
    tr = execute(doc, args.engine, _budget(args.max_steps, doc))
    out.write("format: 1\n")
    if args.trace:
        for k, f in enumerate(tr.configs):
            out.write(trace_record(k, f) + "\n")
    shown = {format_vertex(v): z for v, z in sorted(tr.final.displayed().items(),
                                                     key=lambda kv: vkey(kv[0]))}
    out.write("output: " + json.dumps(shown, separators=(",", ":")) + "\n")
    out.write("verdict: " + verdict_text(tr.verdict) + "\n")
    return exit_code(tr.verdict)


def cmd_build(args, out) -> int:
    params = _parse_params(args.params)
    b = build(args.name, params)
    out.write(dumps(to_document(b)))
    return 0


def _parse_params(items: list) -> dict:
    params: dict = {}
    i = 0
    while i < len(items):
        key = items[i]
        if not key.startswith("--") or i + 1 >= len(items):
            raise ValueError(f"parameters must be '--name value' pairs, got {items[i:]}")
        params[key[2:].replace("-", "_")] = items[i + 1]
        i += 2
    return params


def parse_gx(desc: str) -> Callable:
    """``pos=value`` clauses joined by ``;``; ``label=NAME`` is also allowed."""
    clauses = []
    for part in desc.split(";"):
        key, sep, val = part.partition("=")
        if not sep:
            raise ValueError(f"bad X descriptor clause {part!r}")
        key, val = key.strip(), val.strip()
        value = int(val) if val.lstrip("-").isdigit() else val
        clauses.append((key, value))

    def member(v, _m=None):
        for key, value in clauses:
            if key == "label":
                continue
            k = int(key)
            if k >= len(v) or v[k] != value:
                return False
        return True
    member.labels = [v for k, v in clauses if k == "label"]
    return member


def cmd_verify(args, out) -> int:
    doc = load(args.document)
    m = doc.machine
    inputs = doc.input_family()
    out.write("format: 1\n")
    if args.constant_time is not None:
        rep = check_constant_time(m, inputs, args.constant_time)
        lines, ok = rep.lines(), rep.passed
    elif args.linear_space is not None:
        a, b = (int(x) for x in args.linear_space.split(","))
        if args.radius is not None:
            p = tuple(int(x) for x in args.radius.split(","))
            p = p if len(p) == 2 else (0, p[0])
        else:
            stages = []
            for x in inputs:
                tr = execute(MachineDocument(m, x, None, doc.options, doc.builtin), None,
                             _budget(None, doc))
                stages.append(tr.verdict.stage if tr.halted else 0)
            p = (0, max(stages))
        rep = check_linear_space(m, inputs, p, (a, b), _budget(None, doc))
        lines, ok = rep.lines(), rep.passed
    else:
        X = parse_gx(args.gx)
        if X.labels:
            base = X
            X = lambda v: base(v) and m.graph.label(v) in base.labels  # noqa: E731
        rep = check_gx_computable(m, X, inputs, _budget(None, doc))
        lines, ok = rep.lines(), rep.passed
    for line in lines:
        out.write(line + "\n")
    return 0 if ok else EXIT_CHECK_FAILED


def cmd_validate(args, out) -> int:
    doc = load(args.document)
    rep = validate_machine(doc.machine)
    out.write("format: 1\n")
    for v in rep.violations:
        out.write(f"violation: {v}\n")
    out.write(f"exhaustive: {str(rep.exhaustive).lower()}\n")
    out.write(f"valid: {str(rep.ok).lower()}\n")
    return 0 if rep.ok else EXIT_CHECK_FAILED


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gtm", description="graph Turing machines")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a machine document")
    r.add_argument("document")
    r.add_argument("--trace", action="store_true")
    r.add_argument("--max-steps", type=int)
    r.add_argument("--engine", choices=("finite", "finite_degree", "truncated"))
    r.set_defaults(func=cmd_run)
    b = sub.add_parser("build", help="emit the document of a named construction")
    b.add_argument("name")
    b.add_argument("params", nargs=argparse.REMAINDER)
    b.set_defaults(func=cmd_build)
    v = sub.add_parser("verify", help="check a resource bound on the document's inputs")
    v.add_argument("document")
    g = v.add_mutually_exclusive_group(required=True)
    g.add_argument("--constant-time", type=int, metavar="C")
    g.add_argument("--linear-space", metavar="A,B", help="q(n) = A*n + B")
    g.add_argument("--gx", metavar="X", help="X as 'pos=value;...' clauses")
    v.add_argument("--radius", metavar="P", help="p(n) as 'P' or 'slope,intercept'")
    v.set_defaults(func=cmd_verify)
    c = sub.add_parser("validate", help="check the closure conditions of the table")
    c.add_argument("document")
    c.set_defaults(func=cmd_validate)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = make_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (DocumentError, GraphMachineError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
