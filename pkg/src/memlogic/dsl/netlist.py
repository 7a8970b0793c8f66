"""Boolean netlists: ``input a, b; n1 = AND(a, b); z = NOT(n1); output z;``"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .errors import CycleError, ParseError, SemanticError
from .lexer import Cursor, tokenize

ARITY = {"NOT": 1, "AND": 2, "NAND": 2, "OR": 2}

FUNCTIONS = {
    "NOT": lambda a: 1 - a,
    "AND": lambda a, b: a & b,
    "NAND": lambda a, b: 1 - (a & b),
    "OR": lambda a, b: a | b,
}


@dataclass(frozen=True)
class Gate:
    id: str
    kind: str
    inputs: tuple
    output: str


@dataclass(frozen=True)
class Netlist:
    inputs: tuple
    gates: tuple
    outputs: tuple

    def driver(self, wire: str):
        """The gate driving ``wire``, or None for a primary input."""
        for g in self.gates:
            if g.output == wire:
                return g
        return None

    def consumers(self, wire: str) -> list:
        """``(gate, port)`` pairs reading ``wire``, in gate order."""
        return [(g, i) for g in self.gates for i, w in enumerate(g.inputs) if w == wire]

    def topological(self) -> list:
        return _toposort(self)

    def evaluate(self, assignment: dict) -> dict:
        values = {w: int(assignment[w]) for w in self.inputs}
        for g in self.topological():
            values[g.output] = FUNCTIONS[g.kind](*(values[w] for w in g.inputs))
        return {w: values[w] for w in self.outputs}

    def assignments(self):
        for bits in product((0, 1), repeat=len(self.inputs)):
            yield dict(zip(self.inputs, bits))

    def __str__(self):
        parts = []
        if self.inputs:
            parts.append("input " + ", ".join(self.inputs) + ";")
        for g in self.gates:
            parts.append(f"{g.output} = {g.kind}({', '.join(g.inputs)});")
        if self.outputs:
            parts.append("output " + ", ".join(self.outputs) + ";")
        return "\n".join(parts) + "\n"


def _toposort(net: Netlist) -> list:
    by_out = {g.output: g for g in net.gates}
    state: dict = {}
    order: list = []

    def visit(g, stack):
        s = state.get(g.output)
        if s == "done":
            return
        if s == "active":
            loop = stack[stack.index(g.output):] + [g.output]
            raise CycleError("combinational loop: " + " -> ".join(loop))
        state[g.output] = "active"
        stack.append(g.output)
        for w in g.inputs:
            if w in by_out:
                visit(by_out[w], stack)
        stack.pop()
        state[g.output] = "done"
        order.append(g)

    for g in net.gates:
        visit(g, [])
    return order


def validate_netlist(net: Netlist, where=None) -> None:
    """Raise on arity, driver and loop errors.

    ``where`` maps ``("def", wire)``, ``("use", wire)`` and ``("out", wire)``
    to a ``(line, col)`` so errors from parsed text point at the source.
    """
    where = where or {}

    def fail(cls, msg, key):
        raise cls(msg, *where.get(key, (0, 0)))

    drivers: dict = {}
    for w in net.inputs:
        if w in drivers:
            fail(SemanticError, f"wire {w!r} declared as input twice", ("def", w))
        drivers[w] = "input"
    for g in net.gates:
        if len(g.inputs) != ARITY[g.kind]:
            fail(SemanticError, f"{g.kind} takes {ARITY[g.kind]} input(s), got {len(g.inputs)}",
                 ("def", g.output))
        if g.output in drivers:
            fail(SemanticError, f"wire {g.output!r} has more than one driver", ("def", g.output))
        drivers[g.output] = g.id
    for g in net.gates:
        for w in g.inputs:
            if w not in drivers:
                fail(SemanticError, f"wire {w!r} is never driven", ("use", w))
    for w in net.outputs:
        if w not in drivers:
            fail(SemanticError, f"output {w!r} is never driven", ("out", w))
    try:
        _toposort(net)
    except CycleError as e:
        first = e.args[0].rsplit(" -> ", 1)[-1]
        fail(CycleError, e.args[0], ("def", first))


def parse_netlist(text: str) -> Netlist:
    cur = Cursor(tokenize(text, keep_newlines=False))
    inputs: list = []
    outputs: list = []
    gates: list = []
    where: dict = {}

    def mark(key, tok):
        where.setdefault(key, (tok.line, tok.col))

    while cur.tok.kind != "eof":
        if cur.at(";"):
            cur.next()
            continue
        first = cur.word("statement")
        if first.text in ("input", "output") and not cur.at("="):
            key = "def" if first.text == "input" else "out"
            toks = [cur.word("wire name")]
            while cur.at(","):
                cur.next()
                toks.append(cur.word("wire name"))
            for t in toks:
                if key == "def" and ("def", t.text) in where:
                    where[("def", t.text)] = (t.line, t.col)  # point at the duplicate
                mark((key, t.text), t)
            (inputs if first.text == "input" else outputs).extend(t.text for t in toks)
        else:
            cur.expect("=")
            kind_tok = cur.word("gate kind")
            kind = kind_tok.text.upper()
            if kind not in ARITY:
                raise ParseError(f"unknown gate kind {kind_tok.text!r}", kind_tok.line, kind_tok.col)
            cur.expect("(")
            toks = [cur.word("wire name")]
            while cur.at(","):
                cur.next()
                toks.append(cur.word("wire name"))
            cur.expect(")")
            args = [t.text for t in toks]
            for t in toks:
                mark(("use", t.text), t)
            if ("def", first.text) in where:
                where[("def", first.text)] = (first.line, first.col)
            mark(("def", first.text), first)
            gates.append(Gate(first.text, kind, tuple(args), first.text))
        if cur.tok.kind != "eof":
            cur.expect(";")
    net = Netlist(tuple(inputs), tuple(gates), tuple(outputs))
    validate_netlist(net, where)
    return net
