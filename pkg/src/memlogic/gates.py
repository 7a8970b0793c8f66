"""Chemistries for Boolean logic and concentration holding.

Output locations differ between constructions and are part of each
constructor's contract:

* cooperative and redundant gates: the environment (results leave the skin);
* :func:`catalyst_and`: the environment;
* :func:`catalyst_not`: the skin region ``"1"``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import product

from .core import HERE, LEAVE, OUT, MembraneSystem, Multiset, Region, Rule, inside
from .dsl.netlist import ARITY, FUNCTIONS

GATE_KINDS = ("NOT", "AND", "NAND", "OR")
SHARED = (("0", "1"), ("0", "1"))
SPLIT = (("x0", "x1"), ("y0", "y1"))
RESULT = ("0", "1")


class ParamError(ValueError):
    pass


class LogicLevel(Enum):
    ZERO = "0"
    ONE = "1"
    UNDEFINED = "undefined"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class RedundancyParams:
    """Input multiplicity ``h``, output multiplicity ``m``, low threshold ``l``.

    ``l`` defaults to ``ceil(h/2)``, capped at ``h - 1``.
    """

    h: int
    m: int
    l: int | None = None

    def __post_init__(self):
        if self.h < 1:
            raise ParamError("h must be positive")
        if self.m <= self.h:
            raise ParamError(f"m ({self.m}) must exceed h ({self.h})")
        if self.l is None:
            object.__setattr__(self, "l", min(math.ceil(self.h / 2), self.h - 1))
        if not 0 <= self.l < self.h:
            raise ParamError(f"l ({self.l}) must satisfy 0 <= l < h ({self.h})")


def _check_kind(kind: str) -> str:
    kind = kind.upper()
    if kind not in GATE_KINDS:
        raise ParamError(f"unknown gate kind {kind!r}")
    return kind


def logic_rules(kind: str, ports=SHARED, result=RESULT, *, h: int = 1, m: int = 1,
                target=LEAVE) -> list:
    """The gate's truth table as rules ``in^h ... -> target out^m``.

    ``ports`` gives the (zero, one) symbol pair of each input; when two ports
    share symbols, combinations with equal left-hand sides collapse into one
    rule, which is how the single-species chemistry gets three AND rules.
    """
    kind = _check_kind(kind)
    arity = ARITY[kind]
    fn = FUNCTIONS[kind]
    rules: dict = {}
    for bits in product((0, 1), repeat=arity):
        lhs: dict = {}
        for port, bit in zip(ports[:arity], bits):
            sym = port[bit]
            lhs[sym] = lhs.get(sym, 0) + h
        lhs_ms = Multiset(lhs)
        rule = Rule(lhs_ms, ((Multiset({result[fn(*bits)]: m}), target),))
        prior = rules.get(lhs_ms)
        if prior is not None and prior != rule:
            raise ParamError(f"{kind} cannot share input symbols: conflicting rules for {lhs_ms}")
        rules[lhs_ms] = rule
    return list(rules.values())


def deletion_rules(symbols) -> list:
    """``s^2 -> H s`` for each symbol: excess copies decay towards one."""
    return [Rule(Multiset({s: 2}), ((Multiset({s: 1}), HERE),)) for s in symbols]


def _inputs_multiset(kind, inputs, ports, copies) -> Multiset:
    if inputs is None:
        return Multiset()
    arity = ARITY[kind]
    if len(inputs) != arity:
        raise ParamError(f"{kind} takes {arity} input(s)")
    c: dict = {}
    for port, bit in zip(ports, inputs):
        sym = port[int(bit)]
        c[sym] = c.get(sym, 0) + copies
    return Multiset(c)


def cooperative_gate(kind: str, inputs=None, *, label: str = "1") -> MembraneSystem:
    """Single membrane holding the cooperative rule set; inputs as ``0``/``1``."""
    kind = _check_kind(kind)
    rules = logic_rules(kind)
    region = Region(label, _inputs_multiset(kind, inputs, SHARED, 1), Multiset(rules))
    return MembraneSystem.build([region], alphabet={"0", "1"},
                                output_alphabet={"0", "1"})


def redundant_gate(kind: str, params: RedundancyParams, inputs=None, *,
                   copies: int | None = None, factor: int = 1,
                   split_inputs: bool = False, label: str = "1") -> MembraneSystem:
    """Concentration-encoded gate: logic rules on ``h`` copies emitting ``m``.

    ``factor`` duplicates every logic rule in the pool, raising its chance of
    being picked against the two deletion rules. With ``split_inputs`` the
    second operand uses its own species (``y0``/``y1``, first operand
    ``x0``/``x1``); otherwise both share ``0``/``1`` as in the plain
    chemistry, where ``s >= 2h`` copies of one operand can satisfy a rule
    meant for two. ``copies`` (default ``2h``) is how many molecules each
    input delivers.
    """
    kind = _check_kind(kind)
    if factor < 1:
        raise ParamError("factor must be positive")
    ports = SPLIT if split_inputs else SHARED
    copies = 2 * params.h if copies is None else copies
    logic = logic_rules(kind, ports, RESULT, h=params.h, m=params.m)
    species = sorted({sym for port in ports[:ARITY[kind]] for sym in port})
    pool = {r: factor for r in logic}
    for r in deletion_rules(species):
        pool[r] = pool.get(r, 0) + 1
    region = Region(label, _inputs_multiset(kind, inputs, ports, copies), Multiset(pool))
    alphabet = set(species) | set(RESULT)
    return MembraneSystem.build([region], alphabet=alphabet, output_alphabet=set(RESULT))


def _rule(lhs: str, *clauses) -> Rule:
    return Rule(Multiset(lhs.split()),
                tuple((Multiset(p.split()), t) for p, t in clauses))


def catalyst_and(inputs=None) -> MembraneSystem:
    """Two-membrane AND driven by the mobile catalysts ``e``, ``d`` and ``a``.

    Inputs go into region ``"2"``; the result is emitted to the environment.
    The zero-output reaction in the skin keeps its catalyst (``e z -> H e,
    OUT 0``) so every catalyst count is conserved.
    """
    IN2 = inside("2")
    r1 = [
        _rule("x a", ("a", IN2)),
        _rule("e 0", ("e", IN2), ("z", HERE)),
        _rule("e z", ("e", HERE), ("0", OUT)),
        _rule("d 1", ("d", IN2)),
        _rule("d n", ("d", HERE), ("1", OUT)),
    ]
    r2 = [
        _rule("0 a", ("0 a", OUT)),
        _rule("1 a", ("1 a", OUT)),
        _rule("e 0", ("e x", OUT)),
        _rule("e 1", ("e x", OUT)),
        _rule("d 0", ("d z x", OUT)),
        _rule("d 1", ("d n x", OUT)),
    ]
    w2 = {"a": 1}
    for bit in inputs or ():
        w2[str(int(bit))] = w2.get(str(int(bit)), 0) + 1
    regions = [
        Region("1", Multiset("d e".split()), Multiset(r1)),
        Region("2", Multiset(w2), Multiset(r2), parent="1"),
    ]
    return MembraneSystem.build(regions, alphabet=set("01denxza"),
                                output_alphabet={"0", "1"})


def catalyst_not(inputs=None) -> MembraneSystem:
    """Two-membrane NOT with mobile catalysts ``n`` and ``x``.

    The input goes into region ``"2"``; the result stays in the skin ``"1"``.
    """
    r1 = [_rule("n x", ("n", inside("2")), ("x", HERE))]
    r2 = [_rule("0 n", ("1 n", OUT)), _rule("1 n", ("0 n", OUT))]
    w2 = {"n": 1}
    for bit in inputs or ():
        w2[str(int(bit))] = w2.get(str(int(bit)), 0) + 1
    regions = [
        Region("1", Multiset({"x": 1}), Multiset(r1)),
        Region("2", Multiset(w2), Multiset(r2), parent="1"),
    ]
    return MembraneSystem.build(regions, alphabet=set("01denxz"),
                                output_alphabet={"0", "1"})


CATALYSTS = {"and": ("a", "d", "e"), "not": ("n", "x")}


def concentration_holder(species: str = "a", m: int = 100, n: int = 20, *,
                         start: int = 1, cap_factor: int = 1,
                         generator: str | None = None) -> MembraneSystem:
    """Keep the count of ``species`` roughly within ``[m - n, m]``.

    By default growth is autocatalytic (``a -> H a^2``) and a cap reaction
    ``a^m -> H a^(m-n)`` knocks the count back down, giving a saw-tooth.
    Passing ``generator="g"`` swaps growth for a persistent generator
    object (``g -> H g a``); that variant grows about ``m`` times slower
    because the generator must be the one sampled object.
    ``cap_factor`` duplicates the cap reaction in the pool.
    """
    if not 0 < n <= m:
        raise ParamError(f"need 0 < n <= m, got n={n}, m={m}")
    if cap_factor < 1:
        raise ParamError("cap_factor must be positive")
    cap = Rule(Multiset({species: m}),
               ((Multiset({species: m - n}), HERE),) if m > n else ())
    contents = {species: start}
    if generator is None:
        grow = Rule(Multiset({species: 1}), ((Multiset({species: 2}), HERE),))
    else:
        grow = Rule(Multiset({generator: 1}), ((Multiset({generator: 1, species: 1}), HERE),))
        contents[generator] = 1
    region = Region("1", Multiset(contents), Multiset({grow: 1, cap: cap_factor}))
    return MembraneSystem.build([region])


def read_level(count: int, params: RedundancyParams) -> LogicLevel:
    """Threshold reading of one species: above ``h`` is 1, below ``l`` is 0."""
    if count > params.h:
        return LogicLevel.ONE
    if count < params.l:
        return LogicLevel.ZERO
    return LogicLevel.UNDEFINED


def read_wire(count0: int, count1: int, params: RedundancyParams) -> LogicLevel:
    """Dual-rail reading: exactly one asserted species decides the value."""
    a0 = read_level(count0, params) is LogicLevel.ONE
    a1 = read_level(count1, params) is LogicLevel.ONE
    if a0 and a1:
        return LogicLevel.AMBIGUOUS
    if a0:
        return LogicLevel.ZERO
    if a1:
        return LogicLevel.ONE
    return LogicLevel.UNDEFINED
