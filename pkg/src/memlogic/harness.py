"""Fault injection, redundancy sweeps and the particle fabric.

The fabric is a graph of small reactors sharing one rule pool. Each step
either runs one reactor attempt at a random live node or tries to move one
random object from a random live node to a live neighbour. Only co-located
objects can react; the graph as a whole behaves like one well-stirred
reactor once objects have mixed. Nodes are plain regions of a flat
membrane system, so reactions reuse the engine's attempt unchanged and
anything a rule sends out of a node lands in the shared environment.
"""
from __future__ import annotations

import csv
import io
import random
import warnings
from collections import deque
from dataclasses import dataclass, field

from .core import NETWORK, MembraneSystem, Multiset, Region
from .engine import Disturbance, SimConfig, Simulation, Trace, _Recorder, run
from .gates import LogicLevel, RedundancyParams, redundant_gate, read_wire
from .dsl.netlist import ARITY, FUNCTIONS

SWEEP_HEADER = ("h", "loss_rate", "seed", "correct", "attempts_to_output")
FABRIC_HEADER = ("nodes", "edges", "p_move", "failures", "correct", "attempts_to_output")


class PartitionWarning(UserWarning):
    """Failures split the live nodes into several components."""


def _prob(name, p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {p}")


@dataclass(frozen=True)
class FaultModel:
    loss_rate: float = 0.0       # per attempt per region
    bursts: tuple = ()           # Disturbances
    node_failure: float = 0.0    # per fabric node, drawn once at start

    def __post_init__(self):
        _prob("loss_rate", self.loss_rate)
        _prob("node_failure", self.node_failure)
        object.__setattr__(self, "bursts", tuple(self.bursts))


def _csv(header, rows, comment=None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- redundancy sweep ---------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    h: int
    loss_rate: float
    seed: int
    correct: bool
    attempts_to_output: int | None

    def as_tuple(self):
        return (self.h, self.loss_rate, self.seed, int(self.correct),
                "" if self.attempts_to_output is None else self.attempts_to_output)


def decided_at(emitted, decide) -> tuple:
    """Replay emissions; return ``(level, attempt)`` once ``decide`` commits."""
    counts: dict = {}
    for attempt, obj in emitted:
        counts[obj] = counts.get(obj, 0) + 1
        level = decide(counts)
        if level in (LogicLevel.ZERO, LogicLevel.ONE, LogicLevel.AMBIGUOUS):
            return level, attempt
    return decide(counts), None


def run_redundant(kind: str, params: RedundancyParams, inputs, *, seed: int = 0,
                  budget: int = 100_000, faults: FaultModel = FaultModel(),
                  factor: int = 1, split_inputs: bool = True, copies: int | None = None,
                  check_every: int = 16) -> tuple:
    """One redundant-gate run; returns ``(level, attempts_to_output, trace)``."""
    sys_ = redundant_gate(kind, params, inputs, factor=factor, split_inputs=split_inputs,
                          copies=copies)

    def decide(c):
        return read_wire(c.get("0", 0), c.get("1", 0), params)

    cfg = SimConfig(seed=seed, max_attempts=budget, halting_check_every=check_every)
    trace = run(sys_, cfg, faults.bursts, loss_rate=faults.loss_rate, record=False,
                until=lambda sim: decide(sim.environment) is not LogicLevel.UNDEFINED)
    level, at = decided_at(trace.emitted, decide)
    return level, at, trace


def sweep_redundancy(kind: str, hs, loss_rates, seeds, *, m_rule=lambda h: h + 2,
                     budget: int = 100_000, factor: int = 1, split_inputs: bool = True,
                     assignment=None) -> list:
    """Correctness of the redundant gate over ``h`` and loss rate.

    Every input is delivered as ``s = 2h`` copies. Unless ``assignment`` is
    given, seed ``i`` uses the ``i mod 2^arity``-th input assignment so each
    cell covers the truth table.
    """
    arity = ARITY[kind.upper()]
    table = [tuple((i >> (arity - 1 - j)) & 1 for j in range(arity)) for i in range(2 ** arity)]
    rows = []
    for h in hs:
        params = RedundancyParams(h, m_rule(h))
        for loss in loss_rates:
            faults = FaultModel(loss_rate=loss)
            for seed in seeds:
                bits = tuple(assignment) if assignment is not None else table[seed % len(table)]
                expected = str(FUNCTIONS[kind.upper()](*bits))
                level, at, _ = run_redundant(kind, params, bits, seed=seed, budget=budget,
                                             faults=faults, factor=factor,
                                             split_inputs=split_inputs)
                rows.append(SweepRow(h, loss, seed, level.value == expected, at))
    return rows


def sweep_csv(rows, comment=None) -> str:
    return _csv(SWEEP_HEADER, [r.as_tuple() for r in rows], comment)


def correctness(rows) -> dict:
    """Fraction correct per ``(h, loss_rate)`` cell."""
    cells: dict = {}
    for r in rows:
        ok, n = cells.get((r.h, r.loss_rate), (0, 0))
        cells[(r.h, r.loss_rate)] = (ok + r.correct, n + 1)
    return {k: ok / n for k, (ok, n) in cells.items()}


# -- topologies ---------------------------------------------------------------

@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple  # sorted (i, j) pairs with i < j

    def __post_init__(self):
        norm = sorted({(min(a, b), max(a, b)) for a, b in self.edges})
        for a, b in norm:
            if a == b or not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"bad edge ({a}, {b})")
        object.__setattr__(self, "edges", tuple(norm))

    def adjacency(self) -> list:
        adj = [[] for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return [tuple(sorted(x)) for x in adj]

    def components(self, alive=None) -> list:
        alive = set(range(self.n)) if alive is None else set(alive)
        adj = self.adjacency()
        seen, comps = set(), []
        for s in sorted(alive):
            if s in seen:
                continue
            comp, todo = [], deque([s])
            seen.add(s)
            while todo:
                v = todo.popleft()
                comp.append(v)
                for w in adj[v]:
                    if w in alive and w not in seen:
                        seen.add(w)
                        todo.append(w)
            comps.append(sorted(comp))
        return comps

    def connected(self, alive=None) -> bool:
        return len(self.components(alive)) <= 1


def cycle(n: int) -> Graph:
    if n < 1:
        raise ValueError("need at least one node")
    if n == 1:
        return Graph(1, ())
    if n == 2:
        return Graph(2, ((0, 1),))
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def grid(rows: int, cols: int) -> Graph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph(rows * cols, tuple(edges))


def erdos_renyi(n: int, p: float, seed: int = 0, *, tries: int = 1000) -> Graph:
    """G(n, p) conditioned on being connected (redrawn until it is)."""
    _prob("p", p)
    rng = random.Random(seed)
    for _ in range(tries):
        edges = tuple((i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p)
        g = Graph(n, edges)
        if g.connected():
            return g
    raise ValueError(f"no connected G({n}, {p}) after {tries} draws")


# -- fabric -------------------------------------------------------------------

def node_label(i: int) -> str:
    return f"n{i}"


class Fabric:
    """Particle reactors on a graph, all hosting a copy of one rule pool."""

    def __init__(self, graph: Graph, rules: Multiset, p_move: float = 0.5, *,
                 seed: int = 0, contents=None, labels=None,
                 rng: random.Random | None = None):
        if not 0.0 < p_move <= 1.0:
            raise ValueError("p_move must be in (0, 1]")
        if not graph.connected():
            raise ValueError("fabric graph must be connected")
        self.graph = graph
        self.p_move = p_move
        self.labels = list(labels) if labels else [node_label(i) for i in range(graph.n)]
        contents = contents or {}
        regions = [Region(lab, contents.get(i, Multiset()), rules)
                   for i, lab in enumerate(self.labels)]
        system = MembraneSystem.build(regions, kind=NETWORK)
        self.sim = Simulation(system, seed, rng=rng)
        self.rng = self.sim.rng
        self.adj = graph.adjacency()
        self.failed: set = set()

    @property
    def attempts(self) -> int:
        return self.sim.attempts

    @property
    def environment(self) -> dict:
        return self.sim.environment

    @property
    def emitted(self) -> list:
        return self.sim.emitted

    def live(self) -> list:
        return [i for i in range(self.graph.n) if i not in self.failed]

    def contents(self, i: int) -> Multiset:
        return self.sim.counts(self.labels[i])

    def total(self) -> Multiset:
        """Aggregate contents over live nodes."""
        acc: dict = {}
        for i in self.live():
            for obj, n in self.sim.contents[self.labels[i]].items():
                acc[obj] = acc.get(obj, 0) + n
        return Multiset(acc)

    def inject(self, objects, node: int | None = None) -> None:
        """Add objects to ``node``, or each object to its own random live node."""
        objects = Multiset(objects) if not isinstance(objects, Multiset) else objects
        if node is not None:
            self.sim.apply_delta(self.labels[node], dict(objects.items()))
            return
        live = self.live()
        for obj in objects.elements():
            i = live[self.rng.randrange(len(live))]
            self.sim.apply_delta(self.labels[i], {obj: 1})

    def fail(self, i: int) -> None:
        """Take node ``i`` down; its contents are lost."""
        if i in self.failed:
            return
        self.failed.add(i)
        lab = self.labels[i]
        self.sim.apply_delta(lab, {o: -n for o, n in self.sim.contents[lab].items()})
        if not self.graph.connected(self.live()):
            warnings.warn(f"node failures partition the fabric: {self.graph.components(self.live())}",
                          PartitionWarning, stacklevel=2)

    def migrate(self, i: int) -> bool:
        """Try to move one random object from node ``i`` to a live neighbour."""
        lab = self.labels[i]
        size = self.sim.sizes[lab]
        nbrs = [j for j in self.adj[i] if j not in self.failed]
        if not size or not nbrs or self.rng.random() >= self.p_move:
            return False
        x = self.rng.randrange(size)
        for obj, c in self.sim.contents[lab].items():
            if x < c:
                break
            x -= c
        j = nbrs[0] if len(nbrs) == 1 else nbrs[self.rng.randrange(len(nbrs))]
        self.sim.apply_delta(lab, {obj: -1})
        self.sim.apply_delta(self.labels[j], {obj: 1})
        return True


def fabric_step(fabric: Fabric) -> Fabric:
    """One step: a reactor attempt or a migration try, chosen by a fair coin.

    Nodes without live neighbours always react; a one-node fabric therefore
    draws exactly the random numbers a one-region engine run draws.
    """
    live = fabric.live()
    if not live:
        fabric.sim.attempts += 1
        return fabric
    rng = fabric.rng
    i = live[0] if len(live) == 1 else live[rng.randrange(len(live))]
    fabric.sim.attempts += 1
    has_nbr = any(j not in fabric.failed for j in fabric.adj[i])
    if has_nbr and rng.random() < 0.5:
        fabric.migrate(i)
    else:
        fabric.sim.attempt(fabric.labels[i])
    return fabric


def fabric_halted(fabric: Fabric) -> bool:
    """No rule could fire even if all live objects met in one node."""
    total = fabric.total()
    rules, _, _ = fabric.sim.pool(fabric.labels[fabric.live()[0]]) if fabric.live() else ([], 0, 0)
    return not any(all(total.get(o, 0) >= n for o, n in r.lhs.items()) for r in rules)


def fabric_trace(fabric: Fabric, config: SimConfig = SimConfig()) -> Trace:
    """Run the fabric in the engine's loop and record the engine's trace format.

    ``config.seed`` is only echoed; the fabric's generator was seeded at
    construction.
    """
    trace = Trace(seed=config.seed)
    rec = _Recorder(fabric.sim, trace)
    rec()
    while True:
        if fabric.attempts % config.halting_check_every == 0 and fabric_halted(fabric):
            trace.halted_at = fabric.attempts
            break
        if fabric.attempts >= config.max_attempts:
            break
        fabric_step(fabric)
        if fabric.attempts % config.trace_every == 0:
            rec()
    rec()
    trace.emitted = fabric.emitted
    trace.attempts = fabric.attempts
    trace.final = fabric.sim.snapshot()
    return trace


@dataclass(frozen=True)
class NodeFailure:
    at_attempt: int
    node: int


@dataclass
class FabricReport:
    nodes: int
    edges: int
    p_move: float
    failures: int
    correct: bool
    attempts_to_output: int | None
    level: LogicLevel = LogicLevel.UNDEFINED
    surviving: dict = field(default_factory=dict)

    @property
    def timed_out(self) -> bool:
        return self.attempts_to_output is None

    def as_tuple(self):
        return (self.nodes, self.edges, self.p_move, self.failures, int(self.correct),
                "" if self.attempts_to_output is None else self.attempts_to_output)


def fabric_csv(reports, comment=None) -> str:
    return _csv(FABRIC_HEADER, [r.as_tuple() for r in reports], comment)


def _presence(c0, c1):
    if c0 and c1:
        return LogicLevel.AMBIGUOUS
    if c0:
        return LogicLevel.ZERO
    if c1:
        return LogicLevel.ONE
    return LogicLevel.UNDEFINED


def fabric_run(graph: Graph, gate: MembraneSystem, inputs, expected, *,
               failures=(), faults: FaultModel = FaultModel(),
               config: SimConfig = SimConfig(), p_move: float = 0.5,
               params: RedundancyParams | None = None,
               outputs=("0", "1")) -> FabricReport:
    """Run a single-region gate's chemistry on a fabric.

    ``inputs`` is either a multiset, each molecule of which goes to a random
    live node, or a mapping ``node -> multiset`` for explicit placement.
    ``failures`` lists :class:`NodeFailure` events; ``faults.node_failure``
    additionally fails each node with that probability right after
    injection. The output is read from the shared environment: by presence,
    or with ``read_wire`` when ``params`` is given.
    """
    (region,) = gate.regions.values()
    fab = Fabric(graph, region.rules, p_move, seed=config.seed)
    if isinstance(inputs, dict):
        for node, ms in sorted(inputs.items()):
            fab.inject(ms, node)
    else:
        fab.inject(inputs)
    if faults.node_failure:
        for i in range(graph.n):
            if fab.rng.random() < faults.node_failure:
                fab.fail(i)
    pending = sorted(failures, key=lambda f: (f.at_attempt, f.node))
    z0, z1 = outputs

    def decide(c):
        if params is not None:
            return read_wire(c.get(z0, 0), c.get(z1, 0), params)
        return _presence(c.get(z0, 0), c.get(z1, 0))

    surviving = None
    while True:
        while pending and pending[0].at_attempt <= fab.attempts:
            fab.fail(pending.pop(0).node)
        if surviving is None and not pending:
            surviving = dict(fab.total().items())
        if decide(fab.environment) is not LogicLevel.UNDEFINED:
            break
        if fab.attempts >= config.max_attempts:
            break
        fabric_step(fab)
    level, at = decided_at(fab.emitted, decide)
    return FabricReport(graph.n, len(graph.edges), p_move, len(fab.failed),
                        level.value == str(expected), at, level, surviving or {})
