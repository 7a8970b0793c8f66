"""Netlist to membrane-system compilation.

Every wire ``w`` gets its own value symbols ``w_0``/``w_1``. Primary inputs
are injected under transport names containing a prime (``a'0``, or
``a'g_n1'0`` when the tree backend routes one input to several gates) so
they cannot trigger gate rules on the way; the destination region renames
them to the wire symbols.

Tree backend: one membrane per gate, each gate's membrane the parent of its
operands' membranes, results climbing out with ``L``; the root gate is the
skin and emits into the environment.

Network backend: a skin holding one cell per gate; cells are joined by
links. A wire read by several gates (or read and also exported) goes
through a splitter cell that copies each molecule once per reader and sends
the copies over labelled links.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

from .core import (HERE, HYBRID, LEAVE, OUT, TREE, MembraneSystem, Multiset,
                   Region, Rule, inside, link)
from .dsl.errors import SemanticError
from .engine import SimConfig, run
from .dsl.netlist import Netlist, validate_netlist
from .dsl.psys import Port, SystemDoc, from_system, print_system, to_system
from .gates import LogicLevel, RedundancyParams, deletion_rules, logic_rules, read_wire

SKIN = "skin"


class ShapeError(SemanticError):
    """The netlist does not fit the requested backend."""


@dataclass(frozen=True)
class CompileOptions:
    backend: str = "tree"
    redundancy: RedundancyParams | None = None
    ready_token: bool = False
    factor: int = 1          # pool multiplicity of every non-deletion rule
    copies: int | None = None  # molecules per injected input; default 1 or 2h

    def __post_init__(self):
        if self.backend not in ("tree", "network"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.factor < 1:
            raise ValueError("factor must be positive")
        if self.ready_token and self.redundancy is not None:
            raise ValueError("ready tokens need single-molecule signals (no redundancy)")

    @property
    def input_copies(self) -> int:
        if self.copies is not None:
            return self.copies
        return 1 if self.redundancy is None else 2 * self.redundancy.h


def wire_symbols(wire: str) -> tuple:
    return (f"{wire}_0", f"{wire}_1")


def _transport(wire: str, dest: str | None = None) -> tuple:
    tag = f"{wire}'{dest}" if dest else wire
    return (f"{tag}'0", f"{tag}'1")


def gate_label(wire: str) -> str:
    return f"g_{wire}"


@dataclass(frozen=True)
class CompiledCircuit:
    netlist: Netlist
    system: MembraneSystem
    inports: tuple            # Port per injection point (an input may have several)
    outports: tuple           # Port per circuit output; region None = environment
    options: CompileOptions = field(default_factory=CompileOptions)
    token: str | None = None

    def inject(self, assignment: dict, copies: int | None = None) -> MembraneSystem:
        """The system with the input molecules (and tokens) placed."""
        copies = self.options.input_copies if copies is None else copies
        sys_ = self.system
        for port in self.inports:
            sym = port.one if int(assignment[port.name]) else port.zero
            extra = {sym: copies}
            if self.token is not None:
                extra[self.token] = copies
            sys_ = sys_.add_contents(port.region, extra)
        return sys_

    def read(self, counts_of) -> dict:
        """Read every output; ``counts_of(region)`` maps a label (None = env) to counts."""
        out = {}
        for port in self.outports:
            c = counts_of(port.region)
            out[port.name] = self.level(c.get(port.zero, 0), c.get(port.one, 0))
        return out

    def level(self, c0: int, c1: int) -> LogicLevel:
        if self.options.redundancy is not None:
            return read_wire(c0, c1, self.options.redundancy)
        if c0 and c1:
            return LogicLevel.AMBIGUOUS
        if c0:
            return LogicLevel.ZERO
        if c1:
            return LogicLevel.ONE
        return LogicLevel.UNDEFINED

    def to_doc(self) -> SystemDoc:
        return from_system(self.system, inports=self.inports,
                           outports=self.outports, token=self.token)

    def dumps(self) -> str:
        return print_system(self.to_doc())


def circuit_from_doc(doc: SystemDoc, netlist: Netlist | None = None,
                     options: CompileOptions | None = None) -> CompiledCircuit:
    return CompiledCircuit(netlist, to_system(doc), doc.inports, doc.outports,
                           options or CompileOptions(), doc.token)


def _pool(rules, factor: int, deletions=()) -> Multiset:
    pool: dict = {}
    for r in rules:
        pool[r] = pool.get(r, 0) + factor
    for r in deletions:
        pool[r] = pool.get(r, 0) + 1
    return Multiset(pool)


def _move(sym: str, target, new: str | None = None) -> Rule:
    return Rule(Multiset({sym: 1}), ((Multiset({new or sym: 1}), target),))


def _gate_rules(net: Netlist, gate, result, opts: CompileOptions) -> tuple:
    ports = [wire_symbols(w) for w in gate.inputs]
    red = opts.redundancy
    h, m = (red.h, red.m) if red else (1, 1)
    logic = logic_rules(gate.kind, ports, result, h=h, m=m, target=LEAVE)
    dels = deletion_rules(sorted({s for p in ports for s in p})) if red else []
    return logic, dels


def compile_tree(net: Netlist, options: CompileOptions | None = None) -> CompiledCircuit:
    """Nested-membrane compilation for tree-shaped circuits.

    Gate outputs must feed exactly one gate (or be the single circuit
    output). Primary inputs may feed several gates; each use gets its own
    transport symbols and is injected separately.
    """
    opts = replace(options or CompileOptions(), backend="tree")
    validate_netlist(net)
    if len(net.outputs) != 1:
        raise ShapeError("tree backend needs exactly one output")
    out = net.outputs[0]
    for g in net.gates:
        readers = len(net.consumers(g.output))
        if g.output == out and readers:
            raise ShapeError(f"output {out!r} is also read inside the circuit")
        if g.output != out and readers != 1:
            raise ShapeError(f"wire {g.output!r} fans out to {readers} gates; "
                             "use the network backend")
    f = opts.factor
    if net.driver(out) is None:
        # passthrough: the skin renames the input straight into the environment
        zero, one = _transport(out, SKIN)
        w0, w1 = wire_symbols(out)
        region = Region(SKIN, rules=_pool([_move(zero, LEAVE, w0), _move(one, LEAVE, w1)], f))
        sys_ = MembraneSystem.build([region], kind=TREE, output_alphabet={w0, w1})
        return _finish(net, sys_, (Port(out, SKIN, zero, one),),
                       (Port(out, None, w0, w1),), opts)

    parent: dict = {}
    order: list = []
    reached = set()

    def visit(wire, par):
        g = net.driver(wire)
        lab = gate_label(wire)
        reached.add(g.output)
        parent[lab] = par
        order.append(g)
        for w in g.inputs:
            if net.driver(w) is not None:
                visit(w, lab)

    visit(out, None)
    unreached = [g.output for g in net.gates if g.output not in reached]
    if unreached:
        raise ShapeError(f"gates not feeding the output: {unreached}")

    def path(lab):
        p = []
        while lab is not None:
            p.append(lab)
            lab = parent[lab]
        return p[::-1]

    rules: dict = {gate_label(g.output): [] for g in order}
    dels: dict = {gate_label(g.output): [] for g in order}
    for g in order:
        lab = gate_label(g.output)
        logic, d = _gate_rules(net, g, wire_symbols(g.output), opts)
        rules[lab] += logic
        dels[lab] += d
    inports = []
    routed = set()
    for g in order:
        lab = gate_label(g.output)
        for w in g.inputs:
            if net.driver(w) is not None:
                continue
            zero, one = _transport(w, lab)
            inports.append(Port(w, path(lab)[0], zero, one))
            if (w, lab) in routed:
                continue
            routed.add((w, lab))
            hops = path(lab)
            for here, nxt in zip(hops, hops[1:]):
                rules[here] += [_move(zero, inside(nxt)), _move(one, inside(nxt))]
            w0, w1 = wire_symbols(w)
            rules[lab] += [_move(zero, HERE, w0), _move(one, HERE, w1)]
    regions = [Region(gate_label(g.output), rules=_pool(rules[gate_label(g.output)], f,
                                                        dels[gate_label(g.output)]),
                      parent=parent[gate_label(g.output)])
               for g in order]
    sys_ = MembraneSystem.build(regions, kind=TREE, output_alphabet=set(wire_symbols(out)))
    w0, w1 = wire_symbols(out)
    return _finish(net, sys_, tuple(inports), (Port(out, None, w0, w1),), opts)


def compile_network(net: Netlist, options: CompileOptions | None = None) -> CompiledCircuit:
    """Cells joined by links inside a skin; any acyclic netlist compiles."""
    opts = replace(options or CompileOptions(), backend="network")
    validate_netlist(net)
    f = opts.factor
    order = net.topological()
    cells = {gate_label(g.output): [] for g in order}
    cell_dels = {gate_label(g.output): [] for g in order}
    links: dict = {}
    splitters: dict = {}
    skin_rules: list = []
    inports = []

    def destinations(wire):
        dests = [gate_label(g.output) for g, _ in net.consumers(wire)]
        if wire in net.outputs:
            dests.append(None)  # exported through the skin
        return dests

    def fan_out(wire, sym_pair, dests, rename_from=None):
        """Splitter for ``wire``; returns its label. ``rename_from`` are the
        incoming symbols when they differ from the wire symbols."""
        lab = f"s_{wire}"
        rules = []
        incoming = rename_from or sym_pair
        for src, sym in zip(incoming, sym_pair):
            tagged = [f"{sym}'{i}" for i in range(1, len(dests) + 1)]
            rules.append(Rule(Multiset({src: 1}), ((Multiset(tagged), HERE),)))
            for i, (t, dest) in enumerate(zip(tagged, dests), start=1):
                rules.append(_move(t, OUT if dest is None else link(str(i)), sym))
        splitters[lab] = rules
        links[lab] = [(str(i), d) for i, d in enumerate(dests, start=1) if d is not None]
        return lab

    exported = []
    for w in net.inputs:
        dests = destinations(w)
        if not dests:
            continue
        zero, one = _transport(w)
        inports.append(Port(w, SKIN, zero, one))
        w0, w1 = wire_symbols(w)
        if len(dests) == 1 and dests[0] is None:
            skin_rules += [_move(zero, LEAVE, w0), _move(one, LEAVE, w1)]
        elif len(dests) == 1:
            dest = dests[0]
            skin_rules += [_move(zero, inside(dest)), _move(one, inside(dest))]
            cells[dest] += [_move(zero, HERE, w0), _move(one, HERE, w1)]
        else:
            lab = fan_out(w, (w0, w1), dests, rename_from=(zero, one))
            skin_rules += [_move(zero, inside(lab)), _move(one, inside(lab))]
            if None in dests:
                exported.append(w)
    for g in order:
        lab = gate_label(g.output)
        logic, d = _gate_rules(net, g, wire_symbols(g.output), opts)
        cells[lab] += logic
        cell_dels[lab] += d
        dests = destinations(g.output)
        if len(dests) == 1 and dests[0] is None:
            exported.append(g.output)
        elif len(dests) == 1:
            links[lab] = [("out", dests[0])]
        elif dests:
            links[lab] = [("out", fan_out(g.output, wire_symbols(g.output), dests))]
            if None in dests:
                exported.append(g.output)
    for w in exported:
        w0, w1 = wire_symbols(w)
        skin_rules += [_move(w0, LEAVE), _move(w1, LEAVE)]

    regions = [Region(SKIN, rules=_pool(skin_rules, f))]
    for lab, rules in cells.items():
        regions.append(Region(lab, rules=_pool(rules, f, cell_dels[lab]), parent=SKIN,
                              links=tuple(links.get(lab, ()))))
    for lab, rules in splitters.items():
        regions.append(Region(lab, rules=_pool(rules, f), parent=SKIN,
                              links=tuple(links.get(lab, ()))))
    outs = set()
    for w in net.outputs:
        outs |= set(wire_symbols(w))
    sys_ = MembraneSystem.build(regions, kind=HYBRID, output_alphabet=outs, skin=SKIN)
    outports = tuple(Port(w, None, *wire_symbols(w)) for w in net.outputs)
    return _finish(net, sys_, tuple(inports), outports, opts)


def _finish(net, sys_, inports, outports, opts) -> CompiledCircuit:
    alphabet = set(sys_.alphabet)
    for p in (*inports, *outports):
        alphabet |= {p.zero, p.one}
    sys_ = MembraneSystem(alphabet, sys_.output_alphabet, sys_.regions, sys_.skin,
                          sys_.environment, sys_.kind)
    circuit = CompiledCircuit(net, sys_, inports, outports, opts)
    if opts.ready_token:
        circuit = attach_ready_token(circuit)
    return circuit


def compile_netlist(net: Netlist, options: CompileOptions | None = None) -> CompiledCircuit:
    opts = options or CompileOptions()
    if opts.backend == "tree":
        return compile_tree(net, opts)
    return compile_network(net, opts)


def _tokenize_rule(rule: Rule, token: str) -> Rule:
    lhs = rule.lhs + Multiset({token: rule.lhs.size})
    rhs = tuple((p + Multiset({token: p.size}) if p.size else p, t) for p, t in rule.rhs)
    return Rule(lhs, rhs)


def attach_ready_token(circuit: CompiledCircuit, token: str = "t") -> CompiledCircuit:
    """Make every reaction carry one token per molecule it consumes or makes.

    A gate then needs a token with each operand and passes one on with its
    result (``a_0 b_1 t^2 -> L z_0 t``), so the token reaching the output
    marks the result as ready. Inputs must be injected together with tokens,
    which :meth:`CompiledCircuit.inject` does.
    """
    if circuit.token is not None:
        return circuit
    if circuit.options.redundancy is not None:
        raise ValueError("ready tokens need single-molecule signals (no redundancy)")
    sys_ = circuit.system
    while token in sys_.alphabet:
        token += "'"
    regions = {}
    for lab, r in sys_.regions.items():
        pool = {}
        for rule, n in r.rules.items():
            new = _tokenize_rule(rule, token)
            pool[new] = pool.get(new, 0) + n
        regions[lab] = Region(lab, r.contents, Multiset(pool), r.parent, r.children, r.links)
    new_sys = MembraneSystem(sys_.alphabet | {token}, sys_.output_alphabet | {token}, regions,
                             sys_.skin, sys_.environment, sys_.kind)
    opts = replace(circuit.options, ready_token=True)
    return CompiledCircuit(circuit.netlist, new_sys, circuit.inports, circuit.outports,
                           opts, token)


# -- verification -------------------------------------------------------------

REPORT_HEADER = ("assignment", "expected", "observed", "pass", "attempts")
TIMEOUT = "timeout"


@dataclass
class VerificationRow:
    assignment: dict
    expected: dict
    outcomes: dict = field(default_factory=dict)  # observed label -> seed count
    passes: int = 0
    runs: int = 0
    worst_attempts: int | None = None

    @property
    def ok(self) -> bool:
        return self.passes == self.runs

    @property
    def timeouts(self) -> int:
        return self.outcomes.get(TIMEOUT, 0)

    def as_tuple(self, inputs, outputs):
        observed = ";".join(f"{k}:{v}" for k, v in sorted(self.outcomes.items()))
        return ("".join(str(self.assignment[w]) for w in inputs),
                "".join(str(self.expected[w]) for w in outputs),
                observed, f"{self.passes}/{self.runs}",
                "" if self.worst_attempts is None else self.worst_attempts)


@dataclass
class VerificationReport:
    netlist: Netlist
    rows: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    @property
    def wrong(self) -> int:
        """Failed runs that produced something other than a timeout."""
        return sum(r.runs - r.passes - r.timeouts for r in self.rows)

    @property
    def timeouts(self) -> int:
        return sum(r.timeouts for r in self.rows)

    def exit_code(self) -> int:
        if self.wrong:
            return 2
        if self.timeouts:
            return 3
        return 0

    def csv(self, comment: str | None = None) -> str:
        buf = io.StringIO()
        if comment is not None:
            buf.write(f"# {comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in self.rows:
            w.writerow(r.as_tuple(self.netlist.inputs, self.netlist.outputs))
        return buf.getvalue()


def observe(circuit: CompiledCircuit, trace) -> tuple:
    """Classify one finished run: ``(label, attempts_to_output)``.

    The label is the output bit string, ``ambiguous``, ``timeout`` (no
    decision within budget), ``stuck`` (halted undecided) or
    ``token-mismatch`` when a ready token and the outputs disagree.
    """
    env = dict(trace.final.environment.items())
    levels = circuit.read(lambda region: env if region is None
                          else dict(trace.final.regions[region].contents.items()))
    # replay emissions to find when every output was first decided
    decided_at = None
    counts: dict = {}
    for attempt, obj in trace.emitted:
        counts[obj] = counts.get(obj, 0) + 1
        now = circuit.read(lambda region: counts)
        if all(v is not LogicLevel.UNDEFINED for v in now.values()):
            decided_at = attempt
            break
    if circuit.token is not None:
        outs = sum(env.get(s, 0) for p in circuit.outports for s in (p.zero, p.one))
        tok = [a for a, o in trace.emitted if o == circuit.token]
        val = [a for a, o in trace.emitted if o in circuit.system.output_alphabet
               and o != circuit.token]
        if env.get(circuit.token, 0) != outs or tok != val:
            return "token-mismatch", decided_at
    if any(v is LogicLevel.AMBIGUOUS for v in levels.values()):
        return "ambiguous", decided_at
    if any(v is LogicLevel.UNDEFINED for v in levels.values()):
        return ("stuck" if trace.halted_at is not None else TIMEOUT), None
    return "".join(levels[p.name].value for p in circuit.outports), decided_at


def verify_against_oracle(netlist: Netlist, circuit: CompiledCircuit, seeds, budget: int,
                          *, disturbances=None, fast_forward: bool = False) -> VerificationReport:
    """Run every assignment under every seed and compare with Boolean evaluation.

    Each run goes until the system halts or ``budget`` attempts pass, so late
    contradictory emissions are caught. ``disturbances`` optionally maps an
    assignment to a list of :class:`Disturbance` (e.g. molecule losses).
    """
    rows = []
    for assignment in netlist.assignments():
        expected = netlist.evaluate(assignment)
        want = "".join(str(expected[w]) for w in netlist.outputs)
        row = VerificationRow(assignment, expected)
        system = circuit.inject(assignment)
        extra = disturbances(assignment) if disturbances else ()
        for seed in seeds:
            cfg = SimConfig(seed=seed, max_attempts=budget, halting_check_every=8,
                            fast_forward=fast_forward)
            trace = run(system, cfg, extra, record=False)
            label, at = observe(circuit, trace)
            row.outcomes[label] = row.outcomes.get(label, 0) + 1
            row.runs += 1
            if label == want:
                row.passes += 1
                if at is not None and (row.worst_attempts is None or at > row.worst_attempts):
                    row.worst_attempts = at
        rows.append(row)
    return VerificationReport(netlist, rows)
