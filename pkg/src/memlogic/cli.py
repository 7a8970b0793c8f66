"""Command-line front end: ``memlogic <subcommand> ...``.

Exit codes: 0 success, 1 parse or validation failure, 2 a verification
found wrong outputs, 3 runs timed out without an answer.
"""
from __future__ import annotations

import argparse
import shlex
import sys
from pathlib import Path

from .core import validate_system
from .dsl import DslError, ParseError, parse_multiset, parse_netlist, parse_system, to_system
from .engine import Disturbance, SimConfig, run
from .compiler import CompileOptions, compile_netlist, verify_against_oracle
from .gates import GATE_KINDS, RedundancyParams, cooperative_gate, redundant_gate
from .harness import (FaultModel, cycle, erdos_renyi, fabric_csv, fabric_run, grid,
                      sweep_csv, sweep_redundancy)
from .dsl.netlist import ARITY, FUNCTIONS

EXIT_OK, EXIT_INVALID, EXIT_WRONG, EXIT_TIMEOUT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _header(seed: int, argv) -> str:
    return f"seed={seed} command={shlex.join(argv)}"


def _positioned(path: str, e: DslError) -> str:
    if isinstance(e, ParseError) or getattr(e, "line", None):
        return f"{path}:{e.line}:{e.col}: {e.message}"
    return f"{path}: {e}"


def _redundancy(text: str | None) -> RedundancyParams | None:
    if not text:
        return None
    try:
        parts = [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --redundancy {text!r}; want h,m[,l]") from None
    if len(parts) not in (2, 3):
        raise UsageError(f"bad --redundancy {text!r}; want h,m[,l]")
    return RedundancyParams(*parts)


def _disturbance(text: str) -> Disturbance:
    """``AT:REGION:+MULTISET`` or ``AT:REGION:-MULTISET``."""
    try:
        at, region, ms = text.split(":", 2)
        sign = {"+": 1, "-": -1}[ms[0]]
        delta = {o: sign * n for o, n in parse_multiset(ms[1:]).items()}
        return Disturbance(int(at), region, delta)
    except (ValueError, KeyError, IndexError, DslError):
        raise UsageError(f"bad --disturb {text!r}; want AT:REGION:+MULTISET or -MULTISET") from None


def _assignment(pairs) -> dict:
    out = {}
    for p in pairs or ():
        name, _, bit = p.partition("=")
        if bit not in ("0", "1"):
            raise UsageError(f"bad --input {p!r}; want NAME=0 or NAME=1")
        out[name] = int(bit)
    return out


def _topology(text: str, seed: int):
    kind, _, rest = text.partition(":")
    try:
        if kind == "cycle":
            return cycle(int(rest))
        if kind == "grid":
            r, c = rest.split("x")
            return grid(int(r), int(c))
        if kind == "random":
            n, p = rest.split(":")
            return erdos_renyi(int(n), float(p), seed)
    except ValueError as e:
        raise UsageError(f"bad --topology {text!r}: {e}") from None
    raise UsageError(f"bad --topology {text!r}; want cycle:N, grid:RxC or random:N:P")


def _load_netlist(path: str):
    return parse_netlist(_read(path))


# -- subcommands ----------------------------------------------------------------

def cmd_validate(args, argv) -> int:
    text = _read(args.file)
    if args.file.endswith(".net"):
        _load_netlist(args.file)
        return EXIT_OK
    sys_ = to_system(parse_system(text))
    problems = validate_system(sys_)
    for v in problems:
        _err(f"{args.file}: {v}")
    return EXIT_INVALID if problems else EXIT_OK


def cmd_run(args, argv) -> int:
    doc = parse_system(_read(args.file))
    sys_ = to_system(doc)
    problems = validate_system(sys_)
    if problems:
        for v in problems:
            _err(f"{args.file}: {v}")
        return EXIT_INVALID
    assignment = _assignment(args.input)
    for port in doc.inports:
        if port.name in assignment:
            sym = port.one if assignment[port.name] else port.zero
            sys_ = sys_.add_contents(port.region, {sym: 1})
            if doc.token:
                sys_ = sys_.add_contents(port.region, {doc.token: 1})
    unknown = set(assignment) - {p.name for p in doc.inports}
    if unknown:
        raise UsageError(f"no inport named {', '.join(sorted(unknown))}")
    cfg = SimConfig(seed=args.seed, max_attempts=args.max_attempts,
                    trace_every=args.trace_every,
                    halting_check_every=args.halting_check_every,
                    scheduler=args.scheduler)
    trace = run(sys_, cfg, [_disturbance(d) for d in args.disturb])
    head = _header(args.seed, argv)
    _write(args.trace, trace.rows_csv(head))
    if args.emitted:
        _write(args.emitted, trace.emitted_csv(head))
    status = f"halted at attempt {trace.halted_at}" if trace.halted_at is not None \
        else f"not halted after {trace.attempts} attempts"
    _err(status)
    if args.require_halt and trace.halted_at is None:
        return EXIT_TIMEOUT
    return EXIT_OK


def _options(args) -> CompileOptions:
    return CompileOptions(backend=args.backend, redundancy=_redundancy(args.redundancy),
                          ready_token=args.token, factor=args.factor)


def cmd_compile(args, argv) -> int:
    net = _load_netlist(args.netfile)
    circuit = compile_netlist(net, _options(args))
    _write(args.output, circuit.dumps())
    return EXIT_OK


def cmd_truth_table(args, argv) -> int:
    net = _load_netlist(args.netfile)
    circuit = compile_netlist(net, _options(args))
    seeds = range(args.seed, args.seed + args.seeds)
    report = verify_against_oracle(net, circuit, seeds, args.budget,
                                   fast_forward=args.fast_forward)
    _write(args.output, report.csv(_header(args.seed, argv)))
    code = report.exit_code()
    if code == EXIT_WRONG:
        _err(f"{report.wrong} run(s) produced a wrong output")
    elif code == EXIT_TIMEOUT:
        _err(f"{report.timeouts} run(s) timed out")
    return code


def cmd_fault_sweep(args, argv) -> int:
    hs = [int(x) for x in args.h.split(",")]
    losses = [float(x) for x in args.loss.split(",")]
    seeds = range(args.seed, args.seed + args.seeds)
    rows = sweep_redundancy(args.gate, hs, losses, seeds, m_rule=lambda h: h + args.margin,
                            budget=args.budget, factor=args.factor,
                            split_inputs=not args.shared)
    _write(args.output, sweep_csv(rows, _header(args.seed, argv)))
    return EXIT_OK


def cmd_fabric_run(args, argv) -> int:
    kind = args.gate.upper()
    graph = _topology(args.topology, args.graph_seed)
    params = _redundancy(args.redundancy)
    arity = ARITY[kind]
    if args.inputs:
        bits = tuple(int(b) for b in args.inputs.split(","))
        if len(bits) != arity:
            raise UsageError(f"{kind} takes {arity} input(s)")
        tables = [bits]
    else:
        tables = [tuple((i >> (arity - 1 - j)) & 1 for j in range(arity))
                  for i in range(2 ** arity)]
    faults = FaultModel(node_failure=args.fail_prob)
    reports = []
    for seed in range(args.seed, args.seed + args.seeds):
        for bits in tables:
            if params is None:
                gate = cooperative_gate(kind, bits)
            else:
                gate = redundant_gate(kind, params, bits, factor=args.factor, split_inputs=True)
            (region,) = gate.regions.values()
            inputs = region.contents
            gate = gate.with_contents(region.label, {})
            cfg = SimConfig(seed=seed, max_attempts=args.budget)
            reports.append(fabric_run(graph, gate, inputs, FUNCTIONS[kind](*bits),
                                      faults=faults, config=cfg, p_move=args.p_move,
                                      params=params))
    _write(args.output, fabric_csv(reports, _header(args.seed, argv)))
    if any(not r.correct and not r.timed_out for r in reports):
        return EXIT_WRONG
    if any(r.timed_out for r in reports):
        return EXIT_TIMEOUT
    return EXIT_OK


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="memlogic",
                                description="Stochastic membrane systems and Boolean circuits.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and check a .psys or .net file")
    v.add_argument("file")
    v.set_defaults(fn=cmd_validate)

    r = sub.add_parser("run", help="simulate a .psys system and write its trace")
    r.add_argument("file")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--max-attempts", type=int, default=10_000)
    r.add_argument("--disturb", action="append", default=[], metavar="AT:REGION:+-MULTISET")
    r.add_argument("--input", action="append", metavar="NAME=BIT",
                   help="inject a Boolean input through the file's inports")
    r.add_argument("--trace", metavar="OUT", help="trace CSV (default stdout)")
    r.add_argument("--emitted", metavar="OUT", help="emitted-objects CSV")
    r.add_argument("--trace-every", type=int, default=1)
    r.add_argument("--halting-check-every", type=int, default=1)
    r.add_argument("--scheduler", choices=("uniform", "round_robin"), default="uniform")
    r.add_argument("--require-halt", action="store_true",
                   help="exit 3 if the run has not halted within the budget")
    r.set_defaults(fn=cmd_run)

    def compile_flags(q):
        q.add_argument("netfile")
        q.add_argument("--backend", choices=("tree", "network"), default="network")
        q.add_argument("--redundancy", metavar="h,m[,l]")
        q.add_argument("--factor", type=int, default=1,
                       help="pool multiplicity of logic and transport rules")
        q.add_argument("--token", action="store_true", help="add the ready token")

    c = sub.add_parser("compile", help="compile a netlist to a .psys system")
    compile_flags(c)
    c.add_argument("-o", "--output", metavar="OUT.psys")
    c.set_defaults(fn=cmd_compile)

    t = sub.add_parser("truth-table", help="check a compiled netlist against Boolean evaluation")
    compile_flags(t)
    t.add_argument("--seeds", type=int, default=100)
    t.add_argument("--seed", type=int, default=0, help="first seed")
    t.add_argument("--budget", type=int, default=100_000)
    t.add_argument("--fast-forward", action="store_true",
                   help="skip attempts that cannot fire (same statistics, other random stream)")
    t.add_argument("-o", "--output", metavar="OUT.csv")
    t.set_defaults(fn=cmd_truth_table)

    f = sub.add_parser("fault-sweep", help="redundant-gate correctness under molecule loss")
    f.add_argument("--gate", choices=GATE_KINDS, type=str.upper, default="AND")
    f.add_argument("--h", default="1,2,4,8", help="comma-separated input multiplicities")
    f.add_argument("--margin", type=int, default=2, help="m = h + margin")
    f.add_argument("--loss", default="0,0.001", help="comma-separated loss rates")
    f.add_argument("--seeds", type=int, default=20)
    f.add_argument("--seed", type=int, default=0, help="first seed")
    f.add_argument("--budget", type=int, default=100_000)
    f.add_argument("--factor", type=int, default=1)
    f.add_argument("--shared", action="store_true",
                   help="both operands use the species 0/1 instead of per-port species")
    f.add_argument("-o", "--output", metavar="OUT.csv")
    f.set_defaults(fn=cmd_fault_sweep)

    b = sub.add_parser("fabric-run", help="run a gate on a particle fabric")
    b.add_argument("--gate", choices=GATE_KINDS, type=str.upper, default="AND")
    b.add_argument("--topology", default="random:16:0.25",
                   help="cycle:N, grid:RxC or random:N:P")
    b.add_argument("--graph-seed", type=int, default=0)
    b.add_argument("--p-move", type=float, default=0.5)
    b.add_argument("--inputs", help="comma-separated bits (default: every assignment)")
    b.add_argument("--redundancy", metavar="h,m[,l]")
    b.add_argument("--factor", type=int, default=1)
    b.add_argument("--fail-prob", type=float, default=0.0,
                   help="chance each node fails right after injection")
    b.add_argument("--seeds", type=int, default=10)
    b.add_argument("--seed", type=int, default=0, help="first seed")
    b.add_argument("--budget", type=int, default=1_000_000)
    b.add_argument("-o", "--output", metavar="OUT.csv")
    b.set_defaults(fn=cmd_fabric_run)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    path = getattr(args, "file", None) or getattr(args, "netfile", None) or "<input>"
    try:
        return args.fn(args, argv)
    except DslError as e:
        _err(_positioned(path, e))
        return EXIT_INVALID
    except (UsageError, ValueError) as e:
        _err(f"memlogic {args.command}: {e}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
