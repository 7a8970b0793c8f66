"""Value types for membrane systems: multisets, rules, regions, systems.

Objects are either symbols (plain ``str``) or :class:`Rule` instances, so a
rule can sit inside a multiset like any molecule. Everything here is
immutable; the engine works on its own mutable copy.
"""
from __future__ import annotations

import re
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Union

SYMBOL_RE = re.compile(r"^[A-Za-z0-9_']+$")
RESERVED = frozenset({"H", "L", "OUT", "IN", "LINK"})

TREE = "tree"
NETWORK = "network"
HYBRID = "hybrid"
KINDS = (TREE, NETWORK, HYBRID)


def sort_key(obj):
    if isinstance(obj, str):
        return (0, obj)
    return (1, str(obj))


class Multiset(Mapping):
    """Immutable counted bag with a canonical (sorted) item order.

    Indexing follows :class:`Mapping`; use ``get(x, 0)`` for counts of
    absent objects. ``len()`` is the number of distinct objects, ``size``
    the total count.
    """

    __slots__ = ("_items", "_counts", "_size", "_hash")

    def __init__(self, items: Union[Mapping, Iterable, None] = None):
        counts: Counter = Counter()
        if items is None:
            pass
        elif isinstance(items, Mapping):
            for obj, n in items.items():
                if n < 0:
                    raise ValueError(f"negative count {n} for {obj!r}")
                counts[obj] += n
        elif isinstance(items, str):
            counts[items] += 1
        else:
            for obj in items:
                counts[obj] += 1
        ordered = sorted(((o, n) for o, n in counts.items() if n > 0),
                         key=lambda kv: sort_key(kv[0]))
        self._items = tuple(ordered)
        self._counts = dict(ordered)
        self._size = sum(n for _, n in ordered)
        self._hash = None

    def __getitem__(self, obj):
        return self._counts.get(obj, 0)

    def __iter__(self):
        return (o for o, _ in self._items)

    def __len__(self):
        return len(self._items)

    def __contains__(self, obj):
        return obj in self._counts

    def __eq__(self, other):
        if isinstance(other, Multiset):
            return self._items == other._items
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._items)
        return self._hash

    def __le__(self, other: "Multiset") -> bool:
        return self.issubset(other)

    def __add__(self, other: "Multiset") -> "Multiset":
        c = Counter(self._counts)
        c.update(other._counts)
        return Multiset(c)

    def __sub__(self, other: "Multiset") -> "Multiset":
        c = Counter(self._counts)
        c.subtract(other._counts)
        return Multiset({o: n for o, n in c.items() if n > 0})

    def __mul__(self, k: int) -> "Multiset":
        return Multiset({o: n * k for o, n in self._items})

    def __repr__(self):
        return f"Multiset({dict(self._items)!r})"

    def __str__(self):
        return format_multiset(self)

    @property
    def size(self) -> int:
        return self._size

    def items(self):
        return self._items

    def issubset(self, other: "Multiset") -> bool:
        get = other._counts.get
        return all(get(o, 0) >= n for o, n in self._items)

    def add(self, obj, n: int = 1) -> "Multiset":
        c = dict(self._counts)
        c[obj] = c.get(obj, 0) + n
        return Multiset(c)

    def remove(self, obj, n: int = 1) -> "Multiset":
        """Remove up to ``n`` copies of ``obj`` (clipped at zero)."""
        c = dict(self._counts)
        if obj in c:
            c[obj] = max(0, c[obj] - n)
        return Multiset(c)

    def elements(self):
        for o, n in self._items:
            for _ in range(n):
                yield o

    def symbols(self) -> set:
        """All symbol names, including those nested in rule objects."""
        out = set()
        for o, _ in self._items:
            if isinstance(o, Rule):
                out |= o.symbols()
            else:
                out.add(o)
        return out


EMPTY = Multiset()


def multiset_subset(a: Multiset, b: Multiset) -> bool:
    return a.issubset(b)


def format_multiset(ms: Multiset) -> str:
    parts = []
    for obj, n in ms.items():
        text = f"({obj})" if isinstance(obj, Rule) else obj
        parts.append(text if n == 1 else f"{text}^{n}")
    return " ".join(parts)


@dataclass(frozen=True)
class Target:
    """Where a product goes.

    ``here`` stays put, ``out`` goes to the parent (or the environment from a
    root), ``in`` enters a named child, ``link`` follows an outgoing link
    (a random one when unlabelled), and ``leave`` is the written ``L``: a
    link when the region has outgoing links, otherwise ``out``.
    """

    kind: str
    label: str | None = None

    def __post_init__(self):
        if self.kind not in ("here", "out", "in", "link", "leave"):
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.kind == "in" and not self.label:
            raise ValueError("IN target needs a child label")
        if self.kind in ("here", "out", "leave") and self.label is not None:
            raise ValueError(f"{self.kind} target takes no label")

    def __str__(self):
        if self.kind == "here":
            return "H"
        if self.kind == "out":
            return "OUT"
        if self.kind == "leave":
            return "L"
        if self.kind == "in":
            return f"IN({self.label})"
        return "LINK" if self.label is None else f"LINK({self.label})"


HERE = Target("here")
OUT = Target("out")
LEAVE = Target("leave")


def inside(label: str) -> Target:
    return Target("in", label)


def link(label: str | None = None) -> Target:
    return Target("link", label)


def _as_multiset(x) -> Multiset:
    if isinstance(x, Multiset):
        return x
    return Multiset(x)


@dataclass(frozen=True)
class Rule:
    """``lhs -> (product, target) ...``; a rule may have no products."""

    lhs: Multiset
    rhs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "lhs", _as_multiset(self.lhs))
        rhs = tuple((_as_multiset(p), t) for p, t in self.rhs)
        object.__setattr__(self, "rhs", rhs)

    def __str__(self):
        clauses = " ".join(f"{t} {format_multiset(p)}".rstrip()
                           for p, t in self.rhs)
        return f"{format_multiset(self.lhs)} -> {clauses}".rstrip()

    @property
    def cooperative(self) -> bool:
        return self.lhs.size > 1

    def symbols(self) -> set:
        out = self.lhs.symbols()
        for p, _ in self.rhs:
            out |= p.symbols()
        return out

    def products_size(self) -> int:
        return sum(p.size for p, _ in self.rhs)


def classify_rule(rule: Rule) -> str:
    return "cooperative" if rule.cooperative else "noncooperative"


@dataclass(frozen=True)
class Region:
    label: str
    contents: Multiset = EMPTY
    rules: Multiset = EMPTY
    parent: str | None = None
    children: tuple = ()
    links: tuple = ()  # ordered ((link_label, head_region_label), ...)

    def __post_init__(self):
        object.__setattr__(self, "contents", _as_multiset(self.contents))
        object.__setattr__(self, "rules", _as_multiset(self.rules))
        object.__setattr__(self, "children", tuple(self.children))
        object.__setattr__(self, "links", tuple(tuple(x) for x in self.links))


@dataclass(frozen=True)
class MembraneSystem:
    """Regions keyed by label, plus alphabet, output alphabet and environment."""

    alphabet: frozenset
    output_alphabet: frozenset
    regions: Mapping
    skin: str | None = None
    environment: Multiset = EMPTY
    kind: str = TREE

    def __post_init__(self):
        object.__setattr__(self, "alphabet", frozenset(self.alphabet))
        object.__setattr__(self, "output_alphabet", frozenset(self.output_alphabet))
        object.__setattr__(self, "regions", dict(self.regions))
        object.__setattr__(self, "environment", _as_multiset(self.environment))

    def __getitem__(self, label: str) -> Region:
        return self.regions[label]

    @property
    def labels(self) -> list:
        return list(self.regions)

    @classmethod
    def build(cls, regions: Iterable[Region], *, alphabet=None,
              output_alphabet=(), kind=None, environment=EMPTY,
              skin=None) -> "MembraneSystem":
        """Assemble a system, deriving children lists from ``parent`` fields.

        The alphabet defaults to every symbol mentioned in contents or rules;
        the kind defaults to tree when there are no links, network when there
        is no containment, hybrid otherwise.
        """
        regions = list(regions)
        children: dict = {r.label: [] for r in regions}
        for r in regions:
            if r.parent is not None:
                children.setdefault(r.parent, []).append(r.label)
        by_label = {}
        for r in regions:
            kids = tuple(r.children) or tuple(children.get(r.label, ()))
            by_label[r.label] = Region(r.label, r.contents, r.rules, r.parent,
                                       kids, r.links)
        # preorder from each root keeps file round trips order-stable
        fixed: dict = {}

        def visit(label):
            if label in fixed or label not in by_label:
                return
            fixed[label] = by_label[label]
            for kid in by_label[label].children:
                visit(kid)

        for r in regions:
            if r.parent is None:
                visit(r.label)
        for r in regions:
            fixed.setdefault(r.label, by_label[r.label])
        has_links = any(r.links for r in regions)
        has_tree = any(r.parent is not None for r in regions)
        if kind is None:
            if has_links and has_tree:
                kind = HYBRID
            elif has_links:
                kind = NETWORK
            elif has_tree or len(regions) == 1:
                kind = TREE
            else:
                kind = NETWORK
        if skin is None:
            roots = [r.label for r in regions if r.parent is None]
            if kind != NETWORK and len(roots) == 1:
                skin = roots[0]
        if alphabet is None:
            syms = set(environment.symbols()) if environment else set()
            for r in regions:
                syms |= r.contents.symbols()
                for rule in r.rules:
                    syms |= rule.symbols()
            alphabet = syms
        return cls(frozenset(alphabet), frozenset(output_alphabet), fixed,
                   skin, environment, kind)

    def replace_region(self, region: Region) -> "MembraneSystem":
        regions = dict(self.regions)
        regions[region.label] = region
        return MembraneSystem(self.alphabet, self.output_alphabet, regions,
                              self.skin, self.environment, self.kind)

    def with_contents(self, label: str, contents) -> "MembraneSystem":
        r = self.regions[label]
        return self.replace_region(Region(r.label, contents, r.rules, r.parent,
                                          r.children, r.links))

    def add_contents(self, label: str, extra) -> "MembraneSystem":
        return self.with_contents(label, self.regions[label].contents + _as_multiset(extra))

    def total_objects(self) -> int:
        return self.environment.size + sum(r.contents.size for r in self.regions.values())


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    message: str = field(default="", compare=False)

    def __str__(self):
        return f"{self.code} at {self.where}: {self.message}"


def _check_rule(sys_: MembraneSystem, region: Region, rule: Rule, where: str,
                out: list) -> None:
    if rule.lhs.size < 1:
        out.append(Violation("EmptyLhs", where, "rule has no reactants"))
    unknown = sorted(rule.symbols() - sys_.alphabet)
    if unknown:
        out.append(Violation("UnknownSymbol", where, f"not in alphabet: {unknown}"))
    link_labels = [lab for lab, _ in region.links]
    for _, target in rule.rhs:
        if target.kind == "in" and target.label not in region.children:
            out.append(Violation("TargetUnresolvable", where,
                                 f"no child labelled {target.label}"))
        elif target.kind == "link":
            if sys_.kind == TREE:
                out.append(Violation("KindMismatch", where,
                                     "LINK target in a tree system"))
            elif not region.links:
                out.append(Violation("TargetUnresolvable", where,
                                     "LINK target but region has no links"))
            elif target.label is not None and target.label not in link_labels:
                out.append(Violation("TargetUnresolvable", where,
                                     f"no link labelled {target.label}"))


def validate_system(sys_: MembraneSystem) -> list:
    """Return every broken structural invariant; an empty list means valid."""
    out: list = []
    regions = sys_.regions
    if sys_.kind not in KINDS:
        out.append(Violation("KindMismatch", "system", f"unknown kind {sys_.kind}"))
    if not sys_.output_alphabet <= sys_.alphabet:
        out.append(Violation("OutputAlphabet", "system",
                             f"{sorted(sys_.output_alphabet - sys_.alphabet)} not in alphabet"))
    for sym in sorted(sys_.alphabet):
        if not SYMBOL_RE.match(sym) or sym in RESERVED:
            out.append(Violation("BadSymbol", "system", f"invalid symbol {sym!r}"))
    for label, r in regions.items():
        if label != r.label:
            out.append(Violation("StructureError", label, "key does not match label"))
        if r.parent is not None:
            if r.parent not in regions:
                out.append(Violation("StructureError", label, f"unknown parent {r.parent}"))
            elif label not in regions[r.parent].children:
                out.append(Violation("StructureError", label, "parent does not list it as child"))
        for child in r.children:
            if child not in regions or regions[child].parent != label:
                out.append(Violation("StructureError", label, f"bad child {child}"))
        seen = set()
        for lab, head in r.links:
            if lab in seen:
                out.append(Violation("DuplicateLink", label, f"link label {lab} repeated"))
            seen.add(lab)
            if head not in regions:
                out.append(Violation("StructureError", label, f"link to unknown region {head}"))
        unknown = sorted(r.contents.symbols() - sys_.alphabet)
        if unknown:
            out.append(Violation("UnknownSymbol", label, f"contents not in alphabet: {unknown}"))
        for i, rule in enumerate(r.rules):
            if not isinstance(rule, Rule):
                out.append(Violation("StructureError", label, f"non-rule {rule!r} in rule pool"))
                continue
            _check_rule(sys_, r, rule, f"{label}/rule{i}", out)
        for obj in r.contents:
            if isinstance(obj, Rule):
                _check_rule(sys_, r, obj, f"{label}/contents", out)
    # containment must be acyclic
    for label in regions:
        seen, cur = set(), label
        while cur is not None and cur in regions:
            if cur in seen:
                out.append(Violation("StructureError", label, "containment cycle"))
                break
            seen.add(cur)
            cur = regions[cur].parent
    has_tree = any(r.parent is not None for r in regions.values())
    has_links = any(r.links for r in regions.values())
    roots = [lab for lab, r in regions.items() if r.parent is None]
    if sys_.kind == TREE:
        if has_links:
            out.append(Violation("KindMismatch", "system", "tree system has links"))
        if len(roots) != 1 or sys_.skin != roots[0]:
            out.append(Violation("KindMismatch", "system", "tree system needs exactly one skin"))
    elif sys_.kind == NETWORK and has_tree:
        out.append(Violation("KindMismatch", "system", "network system has containment edges"))
    if sys_.skin is not None and (sys_.skin not in regions or regions[sys_.skin].parent is not None):
        out.append(Violation("StructureError", "system", f"bad skin {sys_.skin}"))
    unknown = sorted(sys_.environment.symbols() - sys_.alphabet)
    if unknown:
        out.append(Violation("UnknownSymbol", "environment", f"not in alphabet: {unknown}"))
    return out
