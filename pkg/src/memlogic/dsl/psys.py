"""Reader and writer for ``.psys`` membrane-system files.

One statement per line, ``#`` starts a comment::

    kind tree                         # optional: tree | network | hybrid
    alphabet a b c
    output a                          # output alphabet
    structure [1[2]2[3[4]4]3]1        # containment tree
    cell c1 c2                        # free-standing cells (network)
    environment : a
    contents 2 : b^2 c (a -> H b)     # rules in parentheses are objects
    rule 2 : b c -> H a
    rule 2 * 3 : a^100 -> H a^80      # pool multiplicity
    link c1 -> c2 out                 # optional link label
    inport a -> 1 : a0 a1             # where a Boolean input is injected
    outport z <- env : z0 z1          # where a Boolean output is read
    token t                           # ready token symbol

Rule clauses: ``H ms``, ``L ms``, ``OUT ms``, ``IN(label) ms``, ``LINK ms``,
``LINK(label) ms``. Multiplicities use ``^``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..core import (EMPTY, HERE, HYBRID, KINDS, LEAVE, NETWORK, OUT, RESERVED,
                    TREE, MembraneSystem, Multiset, Region, Rule, Target,
                    format_multiset, inside, link)
from .errors import ParseError, SemanticError
from .lexer import Cursor, Token, tokenize

CLAUSE_WORDS = ("H", "L", "OUT", "IN", "LINK")
ENV = "env"


@dataclass(frozen=True)
class StructNode:
    label: str
    children: tuple = ()

    def labels(self):
        yield self.label
        for c in self.children:
            yield from c.labels()

    def __str__(self):
        inner = "".join(str(c) for c in self.children)
        return f"[{self.label}{inner}]{self.label}"


@dataclass(frozen=True)
class Port:
    name: str
    region: str | None   # None: the environment
    zero: str
    one: str


@dataclass(frozen=True)
class SystemDoc:
    alphabet: frozenset | None = None
    output_alphabet: frozenset = frozenset()
    structure: StructNode | None = None
    cells: tuple = ()
    kind: str | None = None
    environment: Multiset = EMPTY
    contents: dict = field(default_factory=dict)
    rules: dict = field(default_factory=dict)
    links: tuple = ()          # (src, dst, label or None)
    inports: tuple = ()
    outports: tuple = ()
    token: str | None = None

    def region_labels(self) -> list:
        out = list(self.structure.labels()) if self.structure else []
        return out + list(self.cells)


# -- parsing -----------------------------------------------------------------

def _parse_mu(cur: Cursor) -> StructNode:
    cur.expect("[")
    open_tok = cur.word("membrane label")
    kids = []
    while cur.at("["):
        kids.append(_parse_mu(cur))
    cur.expect("]")
    close_tok = cur.tok
    if close_tok.kind != "word":
        raise cur.error(f"expected closing label {open_tok.text!r}")
    if close_tok.text != open_tok.text:
        raise ParseError(f"label mismatch: opened {open_tok.text!r}, closed {close_tok.text!r}",
                         close_tok.line, close_tok.col)
    cur.next()
    return StructNode(open_tok.text, tuple(kids))


def parse_structure(text: str) -> StructNode:
    """Parse bracket notation such as ``[1[2]2[3[4]4]3]1``."""
    cur = Cursor(tokenize(text, keep_newlines=False))
    node = _parse_mu(cur)
    if cur.tok.kind != "eof":
        raise cur.error("trailing input after structure")
    return node


def _parse_multiset(cur: Cursor, stop_words=()) -> tuple:
    """Returns ``(Multiset, [(symbol, token), ...])``."""
    counts: dict = {}
    seen: list = []
    while True:
        t = cur.tok
        if t.kind == "word" and t.text not in stop_words:
            cur.next()
            obj = t.text
            if obj in RESERVED:
                raise ParseError(f"reserved word {obj!r} used as symbol", t.line, t.col)
            seen.append((obj, t))
        elif t.kind == "punct" and t.text == "(":
            cur.next()
            obj, inner = _parse_rule(cur, nested=True)
            cur.expect(")")
            seen.extend(inner)
        else:
            break
        n = 1
        if cur.at("^"):
            cur.next()
            n = cur.integer()
            if n < 1:
                raise cur.error("multiplicity must be positive")
        counts[obj] = counts.get(obj, 0) + n
    return Multiset(counts), seen


def _parse_target(cur: Cursor) -> Target:
    t = cur.next()
    word = t.text
    if word == "H":
        return HERE
    if word == "L":
        return LEAVE
    if word == "OUT":
        return OUT
    if word == "IN":
        cur.expect("(")
        lab = cur.word("child label").text
        cur.expect(")")
        return inside(lab)
    # LINK with optional (label); "(x -> ...)" after LINK is a rule object
    if cur.at("(") and cur.peek().kind == "word" and cur.peek(2).text == ")":
        cur.next()
        lab = cur.next().text
        cur.next()
        return link(lab)
    return link()


def _parse_rule(cur: Cursor, nested: bool = False) -> tuple:
    start = cur.tok
    lhs, seen = _parse_multiset(cur, stop_words=())
    if not cur.at("->"):
        raise cur.error("expected '->' in rule")
    if lhs.size == 0:
        raise ParseError("rule has an empty left-hand side", start.line, start.col)
    cur.next()
    rhs = []
    while cur.tok.kind == "word":
        if cur.tok.text not in CLAUSE_WORDS:
            raise cur.error("expected target H, L, OUT, IN(..) or LINK")
        target = _parse_target(cur)
        ms, more = _parse_multiset(cur, stop_words=CLAUSE_WORDS)
        seen.extend(more)
        rhs.append((ms, target))
    if nested and not cur.at(")"):
        raise cur.error("expected ')' closing rule object")
    return Rule(lhs, tuple(rhs)), seen


def parse_rule(text: str) -> Rule:
    cur = Cursor(tokenize(text, keep_newlines=False))
    rule, _ = _parse_rule(cur)
    if cur.tok.kind != "eof":
        raise cur.error("trailing input after rule")
    return rule


def parse_multiset(text: str) -> Multiset:
    cur = Cursor(tokenize(text, keep_newlines=False))
    ms, _ = _parse_multiset(cur)
    if cur.tok.kind != "eof":
        raise cur.error("unexpected token in multiset")
    return ms


def _end_of_statement(cur: Cursor):
    if cur.tok.kind not in ("nl", "eof"):
        raise cur.error("unexpected token at end of statement")


def parse_system(text: str) -> SystemDoc:
    """Parse a ``.psys`` document; symbols are checked against ``alphabet``."""
    cur = Cursor(tokenize(text))
    alphabet = None
    output = frozenset()
    structure = None
    cells: list = []
    kind = None
    environment = EMPTY
    contents: dict = {}
    rules: dict = {}
    links: list = []
    inports: list = []
    outports: list = []
    token = None
    uses: list = []          # (symbol, token) for alphabet checking
    region_refs: list = []   # (label, token) that must name a declared region

    while cur.tok.kind != "eof":
        if cur.tok.kind == "nl":
            cur.next()
            continue
        kw = cur.word("statement keyword")
        key = kw.text
        if key == "alphabet":
            syms = []
            while cur.tok.kind == "word":
                t = cur.next()
                if t.text in RESERVED:
                    raise ParseError(f"reserved word {t.text!r} used as symbol", t.line, t.col)
                syms.append(t.text)
            alphabet = (alphabet or frozenset()) | frozenset(syms)
        elif key == "output":
            syms = []
            while cur.tok.kind == "word":
                t = cur.next()
                syms.append(t.text)
                uses.append((t.text, t))
            output = output | frozenset(syms)
        elif key == "structure":
            if structure is not None:
                raise cur.error("structure declared twice", kw)
            structure = _parse_mu(cur)
        elif key == "cell":
            if cur.tok.kind != "word":
                raise cur.error("expected cell label")
            while cur.tok.kind == "word":
                cells.append(cur.next())
        elif key == "kind":
            t = cur.word("kind")
            if t.text not in KINDS:
                raise ParseError(f"unknown kind {t.text!r}", t.line, t.col)
            kind = t.text
        elif key == "environment":
            cur.expect(":")
            ms, seen = _parse_multiset(cur)
            uses.extend(seen)
            environment = environment + ms
        elif key == "contents":
            lab = cur.word("region label")
            region_refs.append((lab.text, lab))
            cur.expect(":")
            ms, seen = _parse_multiset(cur)
            uses.extend(seen)
            contents[lab.text] = contents.get(lab.text, EMPTY) + ms
        elif key == "rule":
            lab = cur.word("region label")
            region_refs.append((lab.text, lab))
            n = 1
            if cur.at("*"):
                cur.next()
                n = cur.integer()
                if n < 1:
                    raise cur.error("rule multiplicity must be positive")
            cur.expect(":")
            rule, seen = _parse_rule(cur)
            uses.extend(seen)
            rules[lab.text] = rules.get(lab.text, EMPTY) + Multiset({rule: n})
        elif key == "link":
            src = cur.word("link source")
            cur.expect("->")
            dst = cur.word("link target")
            lab = cur.next().text if cur.tok.kind == "word" else None
            region_refs += [(src.text, src), (dst.text, dst)]
            links.append((src.text, dst.text, lab))
        elif key == "inport":
            name = cur.word("port name").text
            cur.expect("->")
            reg = cur.word("region label")
            region_refs.append((reg.text, reg))
            cur.expect(":")
            z, o = cur.word("symbol"), cur.word("symbol")
            uses += [(z.text, z), (o.text, o)]
            inports.append(Port(name, reg.text, z.text, o.text))
        elif key == "outport":
            name = cur.word("port name").text
            cur.expect("<-")
            reg = cur.word("region label")
            if reg.text != ENV:
                region_refs.append((reg.text, reg))
            cur.expect(":")
            z, o = cur.word("symbol"), cur.word("symbol")
            uses += [(z.text, z), (o.text, o)]
            outports.append(Port(name, None if reg.text == ENV else reg.text, z.text, o.text))
        elif key == "token":
            t = cur.word("token symbol")
            uses.append((t.text, t))
            token = t.text
        else:
            raise ParseError(f"unknown statement {key!r}", kw.line, kw.col)
        _end_of_statement(cur)

    declared: dict = {}
    for lab in (list(structure.labels()) if structure else []):
        if lab in declared:
            raise SemanticError(f"region {lab!r} declared twice")
        declared[lab] = True
    for t in cells:
        if t.text in declared:
            raise SemanticError(f"region {t.text!r} declared twice", t.line, t.col)
        declared[t.text] = True
    if ENV in declared:
        raise SemanticError(f"{ENV!r} is reserved for the environment")
    for lab, t in region_refs:
        if lab not in declared:
            raise SemanticError(f"undeclared region {lab!r}", t.line, t.col)
    if alphabet is not None:
        for sym, t in uses:
            if sym not in alphabet:
                raise SemanticError(f"symbol {sym!r} not in alphabet", t.line, t.col)
    seen_links = set()
    for src, dst, lab in links:
        key = (src, lab if lab is not None else dst)
        if key in seen_links:
            raise SemanticError(f"duplicate link label {key[1]!r} on region {src!r}")
        seen_links.add(key)
    return SystemDoc(
        alphabet=alphabet, output_alphabet=output, structure=structure,
        cells=tuple(t.text for t in cells), kind=kind, environment=environment,
        contents={k: v for k, v in contents.items() if v.size},
        rules={k: v for k, v in rules.items() if v.size},
        links=tuple(links), inports=tuple(inports), outports=tuple(outports),
        token=token)


# -- lowering and lifting ----------------------------------------------------

def to_system(doc: SystemDoc) -> MembraneSystem:
    parents: dict = {}

    def walk(node: StructNode, parent):
        parents[node.label] = parent
        for c in node.children:
            walk(c, node.label)

    if doc.structure is not None:
        walk(doc.structure, None)
    for c in doc.cells:
        parents[c] = None
    out_links: dict = {}
    for src, dst, lab in doc.links:
        out_links.setdefault(src, []).append((lab if lab is not None else dst, dst))
    regions = [Region(lab, doc.contents.get(lab, EMPTY), doc.rules.get(lab, EMPTY),
                      parents[lab], (), tuple(out_links.get(lab, ())))
               for lab in doc.region_labels()]
    skin = doc.structure.label if doc.structure is not None else None
    kind = doc.kind
    if kind is None:
        if doc.links:
            kind = HYBRID if doc.structure is not None else NETWORK
        else:
            kind = TREE if not doc.cells else NETWORK
    return MembraneSystem.build(regions, alphabet=doc.alphabet,
                                output_alphabet=doc.output_alphabet, kind=kind,
                                environment=doc.environment, skin=skin)


def from_system(sys_: MembraneSystem, *, inports=(), outports=(), token=None) -> SystemDoc:
    regions = sys_.regions
    roots = [lab for lab, r in regions.items() if r.parent is None]

    def node(lab):
        return StructNode(lab, tuple(node(c) for c in regions[lab].children))

    structure = None
    cells = []
    if sys_.skin is not None:
        structure = node(sys_.skin)
        cells = [r for r in roots if r != sys_.skin]
    else:
        for r in roots:
            if regions[r].children:
                raise ValueError("nested regions without a skin cannot be written")
            cells.append(r)
    links = []
    for lab, r in regions.items():
        for link_label, head in r.links:
            links.append((lab, head, None if link_label == head else link_label))
    return SystemDoc(
        alphabet=sys_.alphabet, output_alphabet=sys_.output_alphabet,
        structure=structure, cells=tuple(cells), kind=sys_.kind,
        environment=sys_.environment,
        contents={lab: r.contents for lab, r in regions.items() if r.contents.size},
        rules={lab: r.rules for lab, r in regions.items() if r.rules.size},
        links=tuple(links), inports=tuple(inports), outports=tuple(outports),
        token=token)


# -- printing ----------------------------------------------------------------

def print_system(doc: SystemDoc) -> str:
    """Canonical text; ``parse_system(print_system(d)) == d``."""
    lines = []
    if doc.kind is not None:
        lines.append(f"kind {doc.kind}")
    if doc.alphabet is not None:
        lines.append(" ".join(["alphabet", *sorted(doc.alphabet)]))
    if doc.output_alphabet:
        lines.append(" ".join(["output", *sorted(doc.output_alphabet)]))
    if doc.structure is not None:
        lines.append(f"structure {doc.structure}")
    if doc.cells:
        lines.append(" ".join(["cell", *doc.cells]))
    if doc.environment.size:
        lines.append(f"environment : {format_multiset(doc.environment)}")
    for lab in doc.region_labels():
        if lab in doc.contents:
            lines.append(f"contents {lab} : {format_multiset(doc.contents[lab])}")
        for rule, n in doc.rules.get(lab, EMPTY).items():
            mult = f" * {n}" if n > 1 else ""
            lines.append(f"rule {lab}{mult} : {rule}")
    for src, dst, lab in doc.links:
        lines.append(f"link {src} -> {dst}" + (f" {lab}" if lab is not None else ""))
    for p in doc.inports:
        lines.append(f"inport {p.name} -> {p.region} : {p.zero} {p.one}")
    for p in doc.outports:
        lines.append(f"outport {p.name} <- {p.region or ENV} : {p.zero} {p.one}")
    if doc.token is not None:
        lines.append(f"token {doc.token}")
    return "\n".join(lines) + "\n"


def load_system(text: str) -> MembraneSystem:
    return to_system(parse_system(text))


def dump_system(sys_: MembraneSystem, **ports) -> str:
    return print_system(from_system(sys_, **ports))
