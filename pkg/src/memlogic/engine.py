"""Stochastic asynchronous reactor.

Each attempt picks one rule from a region's pool (weighted by its
multiplicity), draws ``|lhs|`` objects without replacement from the region's
contents, and fires the rule only if the draw is exactly the left-hand side.
Nothing else (rates, volumes) influences the dynamics.

Randomness comes from :class:`random.Random` (MT19937) seeded with the
configured integer; ``randrange`` and ``random`` on that generator are
stable across platforms and Python versions, so a seed pins the trace.
"""
from __future__ import annotations

import csv
import io
import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping

from .core import MembraneSystem, Multiset, Region, Rule, sort_key

UNIFORM = "uniform"
ROUND_ROBIN = "round_robin"


class Outcome(Enum):
    APPLIED = "applied"
    REJECTED = "rejected"
    NO_RULES = "no_rules"


class TargetUnresolvable(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    max_attempts: int = 10_000
    scheduler: str = UNIFORM
    trace_every: int = 1
    halting_check_every: int = 1
    fast_forward: bool = False

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.trace_every < 1 or self.halting_check_every < 1:
            raise ValueError("strides must be >= 1")
        if self.scheduler not in (UNIFORM, ROUND_ROBIN):
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.fast_forward and self.scheduler != UNIFORM:
            raise ValueError("fast_forward needs the uniform scheduler")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class Disturbance:
    """Add (positive) or remove (negative) molecules at a given attempt."""

    at_attempt: int
    region: str
    delta: Mapping

    def __post_init__(self):
        object.__setattr__(self, "delta", dict(self.delta))


@dataclass
class Trace:
    seed: int
    rows: list = field(default_factory=list)      # (attempt, region, object, count)
    emitted: list = field(default_factory=list)   # (attempt, object)
    halted_at: int | None = None
    attempts: int = 0
    final: MembraneSystem | None = field(default=None, compare=False)

    def rows_csv(self, comment: str | None = None) -> str:
        buf = io.StringIO()
        if comment is not None:
            buf.write(f"# {comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["attempt", "region", "object", "count"])
        w.writerows(self.rows)
        return buf.getvalue()

    def emitted_csv(self, comment: str | None = None) -> str:
        buf = io.StringIO()
        if comment is not None:
            buf.write(f"# {comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["attempt", "emitted_object"])
        w.writerows(self.emitted)
        return buf.getvalue()

    def series(self, region: str, obj: str) -> list:
        """``(attempt, count)`` pairs for one object in one region."""
        return [(a, c) for a, r, o, c in self.rows if r == region and o == obj]


def match_probability(lhs: Multiset, contents: Multiset) -> float:
    """Chance that ``|lhs|`` objects drawn without replacement equal ``lhs``.

    Counts favourable sub-multisets: prod C(c_s, u_s) over C(|C|, |u|).
    """
    k = lhs.size
    if k > contents.size:
        return 0.0
    favourable = 1
    for obj, n in lhs.items():
        favourable *= math.comb(contents.get(obj, 0), n)
    return favourable / math.comb(contents.size, k)


def firing_probability(rule: Rule, region: Region) -> float:
    """Per-attempt probability that ``rule`` is picked and fires in ``region``."""
    total = sum(region.rules.values()) + sum(
        n for o, n in region.contents.items() if isinstance(o, Rule))
    weight = region.rules.get(rule, 0) + region.contents.get(rule, 0)
    if not total:
        return 0.0
    return weight / total * match_probability(rule.lhs, region.contents)


def _obj_text(obj) -> str:
    return f"({obj})" if isinstance(obj, Rule) else obj


class _Compiled:
    __slots__ = ("rule", "lhs", "k", "products")

    def __init__(self, rule: Rule):
        self.rule = rule
        self.lhs = dict(rule.lhs.items())
        self.k = rule.lhs.size
        self.products = [(list(p.items()), t) for p, t in rule.rhs]


class Simulation:
    """Mutable working state of one run; the input system is not modified."""

    def __init__(self, system: MembraneSystem, seed: int = 0,
                 scheduler: str = UNIFORM, rng: random.Random | None = None):
        self.system = system
        self.rng = rng if rng is not None else random.Random(seed)
        self.scheduler = scheduler
        self.labels = list(system.regions)
        self.contents = {lab: dict(r.contents.items()) for lab, r in system.regions.items()}
        self.sizes = {lab: r.contents.size for lab, r in system.regions.items()}
        self.environment = dict(system.environment.items())
        self.attempts = 0
        self.emitted: list = []
        self._compiled: dict = {}
        self._pools = {lab: self._make_pool(r.rules.items()) for lab, r in system.regions.items()}
        self._rule_objs = {lab: sum(n for o, n in r.contents.items() if isinstance(o, Rule))
                           for lab, r in system.regions.items()}

    def _compile(self, rule: Rule) -> _Compiled:
        c = self._compiled.get(rule)
        if c is None:
            c = self._compiled[rule] = _Compiled(rule)
        return c

    def _make_pool(self, items):
        rules, cum, total = [], [], 0
        for rule, n in items:
            total += n
            rules.append(self._compile(rule))
            cum.append(total)
        return rules, cum, total

    def pool(self, label: str):
        """Active rules: the static pool plus rule objects in the contents."""
        base = self._pools[label]
        if not self._rule_objs[label]:
            return base
        static = list(self.system.regions[label].rules.items())
        dyn = sorted(((o, n) for o, n in self.contents[label].items() if isinstance(o, Rule)),
                     key=lambda kv: sort_key(kv[0]))
        return self._make_pool(static + dyn)

    # -- content bookkeeping -------------------------------------------------
    def _add(self, label, obj, n):
        if label is None:
            env = self.environment
            env[obj] = env.get(obj, 0) + n
            for _ in range(n):
                self.emitted.append((self.attempts, _obj_text(obj)))
            return
        c = self.contents[label]
        c[obj] = c.get(obj, 0) + n
        self.sizes[label] += n
        if isinstance(obj, Rule):
            self._rule_objs[label] += n

    def _take(self, label, obj, n):
        c = self.contents[label]
        have = c.get(obj, 0)
        n = min(n, have)
        if n == have:
            c.pop(obj, None)
        else:
            c[obj] = have - n
        self.sizes[label] -= n
        if n and isinstance(obj, Rule):
            self._rule_objs[label] -= n
        return n

    def _destination(self, label, target):
        region = self.system.regions[label]
        kind = target.kind
        if kind == "here":
            return label
        if kind == "out" or (kind == "leave" and not region.links):
            return region.parent
        if kind == "in":
            if target.label not in region.children:
                raise TargetUnresolvable(f"{label}: no child {target.label}")
            return target.label
        links = region.links
        if not links:
            raise TargetUnresolvable(f"{label}: no outgoing links")
        if kind == "link" and target.label is not None:
            for lab, head in links:
                if lab == target.label:
                    return head
            raise TargetUnresolvable(f"{label}: no link {target.label}")
        if len(links) == 1:
            return links[0][1]
        return links[self.rng.randrange(len(links))][1]

    # -- the reactor -----------------------------------------------------------
    def attempt(self, label: str):
        """One try at one region; returns ``(Outcome, rule or None)``."""
        rules, cum, total = self.pool(label)
        if total == 0:
            return Outcome.NO_RULES, None
        crule = rules[0] if total == 1 else rules[bisect_right(cum, self.rng.randrange(total))]
        return self._try(label, crule)

    def _try(self, label: str, crule: _Compiled):
        rng = self.rng
        k = crule.k
        remaining = self.sizes[label]
        if remaining < k:
            return Outcome.REJECTED, None
        contents = self.contents[label]
        need = dict(crule.lhs)
        taken: dict = {}
        for _ in range(k):
            x = rng.randrange(remaining)
            for obj, c in contents.items():
                avail = c - taken.get(obj, 0)
                if x < avail:
                    break
                x -= avail
            if need.get(obj, 0) <= 0:
                return Outcome.REJECTED, None
            need[obj] -= 1
            taken[obj] = taken.get(obj, 0) + 1
            remaining -= 1
        for obj, n in crule.lhs.items():
            self._take(label, obj, n)
        for items, target in crule.products:
            dest = self._destination(label, target)
            for obj, n in items:
                self._add(dest, obj, n)
        return Outcome.APPLIED, crule.rule

    def choose_region(self) -> str:
        n = len(self.labels)
        if self.scheduler == ROUND_ROBIN:
            return self.labels[self.attempts % n]
        if n == 1:
            return self.labels[0]
        return self.labels[self.rng.randrange(n)]

    def live_rules(self) -> list:
        """``(label, rule, p)`` for rules whose lhs is present; ``p`` is the
        chance one uniform-scheduler attempt picks that region and rule."""
        out = []
        n = len(self.labels)
        for lab in self.labels:
            rules, cum, total = self.pool(lab)
            if not total:
                continue
            c = self.contents[lab]
            prev = 0
            for crule, upto in zip(rules, cum):
                w, prev = upto - prev, upto
                if all(c.get(o, 0) >= k for o, k in crule.lhs.items()):
                    out.append((lab, crule, w / total / n))
        return out

    def leap(self, limit: int, live: list):
        """Jump over attempts that cannot fire, then try the next one that can.

        An attempt whose rule has an absent lhs is rejected whatever is
        drawn, so the number of such attempts before the next promising one
        is geometric. Stops at ``limit`` without trying when the jump would
        pass it. Same per-attempt law as :meth:`step`, different random
        stream.
        """
        p = sum(w for _, _, w in live)
        rng = self.rng
        skip = 0
        if p < 1.0:
            skip = int(math.log(1.0 - rng.random()) / math.log1p(-p))
        if self.attempts + skip + 1 > limit:
            self.attempts = limit
            return None
        self.attempts += skip + 1
        x = rng.random() * p
        for label, crule, w in live:
            x -= w
            if x < 0:
                break
        return self._try(label, crule)

    def step(self):
        label = self.choose_region()
        self.attempts += 1
        return self.attempt(label)

    def applicable(self, label: str) -> bool:
        contents = self.contents[label]
        rules, _, _ = self.pool(label)
        for crule in rules:
            if all(contents.get(o, 0) >= n for o, n in crule.lhs.items()):
                return True
        return False

    def is_halted(self) -> bool:
        return not any(self.applicable(lab) for lab in self.labels)

    def apply_delta(self, label: str, delta: Mapping) -> None:
        for obj, n in sorted(delta.items(), key=lambda kv: sort_key(kv[0])):
            if n > 0:
                self._add(label, obj, n)
            elif n < 0:
                self._take(label, obj, -n)

    def lose_random(self, label: str) -> object | None:
        """Remove one uniformly chosen object from a region (molecule loss)."""
        size = self.sizes[label]
        if size == 0:
            return None
        x = self.rng.randrange(size)
        for obj, c in self.contents[label].items():
            if x < c:
                break
            x -= c
        self._take(label, obj, 1)
        return obj

    def counts(self, label: str | None) -> Multiset:
        if label is None:
            return Multiset(self.environment)
        return Multiset(self.contents[label])

    def snapshot(self) -> MembraneSystem:
        regions = {}
        for lab, r in self.system.regions.items():
            regions[lab] = Region(lab, Multiset(self.contents[lab]), r.rules,
                                  r.parent, r.children, r.links)
        s = self.system
        return MembraneSystem(s.alphabet, s.output_alphabet, regions, s.skin,
                              Multiset(self.environment), s.kind)


def is_halted(system: MembraneSystem) -> bool:
    """True iff no rule in any region has its left-hand side available."""
    return Simulation(system).is_halted()


class _Recorder:
    def __init__(self, sim: Simulation, trace: Trace):
        self.sim = sim
        self.trace = trace
        self.seen = {lab: set() for lab in sim.labels}
        self.last = -1

    def __call__(self):
        sim = self.sim
        if sim.attempts == self.last:
            return
        self.last = sim.attempts
        for lab in sim.labels:
            seen = self.seen[lab]
            seen.update(sim.contents[lab])
            c = sim.contents[lab]
            for obj in sorted(seen, key=sort_key):
                self.trace.rows.append((sim.attempts, lab, _obj_text(obj), c.get(obj, 0)))


def _apply_due(sim, pending):
    while pending and pending[0].at_attempt <= sim.attempts:
        d = pending.pop(0)
        sim.apply_delta(d.region, d.delta)


def _run_leaping(sim, config, pending, until, rec, trace):
    while True:
        _apply_due(sim, pending)
        if until is not None and until(sim):
            return
        if sim.attempts >= config.max_attempts:
            return
        live = sim.live_rules()
        limit = min(config.max_attempts, pending[0].at_attempt if pending else config.max_attempts)
        if not live:
            if not pending:
                trace.halted_at = sim.attempts
                return
            sim.attempts = limit
            continue
        if sim.leap(limit, live) is not None and rec:
            rec()


def run(system: MembraneSystem, config: SimConfig = SimConfig(),
        disturbances: Iterable[Disturbance] = (), *, loss_rate: float = 0.0,
        until: Callable[[Simulation], bool] | None = None,
        record: bool = True) -> Trace:
    """Run the reactor until ``max_attempts``, halting, or ``until(sim)``.

    With ``config.fast_forward`` hopeless attempts are skipped in bulk (see
    :meth:`Simulation.leap`); halting is then detected exactly, ``until``
    is checked after every firing, and rows are recorded only at attempts
    where something fired.

    Halting and ``until`` are checked every ``halting_check_every`` attempts;
    halting only ends the run once no disturbance is pending. A
    disturbance at ``t`` is applied right after attempt ``t`` (``t = 0``:
    before the first attempt), so the trace row for ``t`` already shows it.
    ``loss_rate`` removes one random object per region with that
    probability after every attempt.
    """
    if not 0.0 <= loss_rate <= 1.0:
        raise ValueError("loss_rate must be in [0, 1]")
    sim = Simulation(system, config.seed, config.scheduler)
    trace = Trace(seed=config.seed)
    rec = _Recorder(sim, trace) if record else None
    pending = sorted(disturbances, key=lambda d: d.at_attempt)
    check = config.halting_check_every
    stride = config.trace_every
    _apply_due(sim, pending)
    if rec:
        rec()
    if config.fast_forward:
        if loss_rate:
            raise ValueError("fast_forward cannot model per-attempt loss")
        _run_leaping(sim, config, pending, until, rec, trace)
    while not config.fast_forward:
        if sim.attempts % check == 0:
            if until is not None and until(sim):
                break
            if not pending and sim.is_halted():
                trace.halted_at = sim.attempts
                break
        if sim.attempts >= config.max_attempts:
            break
        sim.step()
        if loss_rate:
            for lab in sim.labels:
                if sim.rng.random() < loss_rate:
                    sim.lose_random(lab)
        _apply_due(sim, pending)
        if rec and sim.attempts % stride == 0:
            rec()
    if rec:
        rec()
    trace.emitted = sim.emitted
    trace.attempts = sim.attempts
    trace.final = sim.snapshot()
    return trace
