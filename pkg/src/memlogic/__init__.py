"""Stochastic membrane systems with Boolean gate chemistries.

Modules: :mod:`core` (multisets, rules, regions), :mod:`engine` (the
reactor), :mod:`dsl` (``.psys`` and ``.net`` files), :mod:`gates`,
:mod:`compiler`, :mod:`harness` (faults, sweeps, particle fabric) and
:mod:`cli`.
"""
from .core import (HERE, LEAVE, OUT, MembraneSystem, Multiset, Region, Rule, Target,
                   Violation, inside, link, validate_system)
from .engine import Disturbance, Outcome, SimConfig, Simulation, Trace, is_halted, run
from .gates import (LogicLevel, RedundancyParams, catalyst_and, catalyst_not,
                    concentration_holder, cooperative_gate, read_level, read_wire,
                    redundant_gate)
from .compiler import (CompileOptions, CompiledCircuit, ShapeError, attach_ready_token,
                       compile_netlist, compile_network, compile_tree, verify_against_oracle)
from .dsl import load_system, parse_netlist, parse_system
from .harness import Fabric, FaultModel, fabric_run, fabric_step, sweep_redundancy

__version__ = "0.1.0"

__all__ = [
    "HERE", "LEAVE", "OUT", "CompileOptions", "CompiledCircuit", "Disturbance",
    "Fabric", "FaultModel", "LogicLevel", "MembraneSystem", "Multiset", "Outcome",
    "RedundancyParams", "Region", "Rule", "ShapeError", "SimConfig", "Simulation",
    "Target", "Trace", "Violation", "attach_ready_token", "catalyst_and",
    "catalyst_not", "compile_netlist", "compile_network", "compile_tree",
    "concentration_holder", "cooperative_gate", "fabric_run", "fabric_step", "inside",
    "is_halted", "link", "load_system", "parse_netlist", "parse_system", "read_level",
    "read_wire", "redundant_gate", "run", "sweep_redundancy", "validate_system",
    "verify_against_oracle",
]
