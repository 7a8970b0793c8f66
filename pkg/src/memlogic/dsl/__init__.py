from .errors import CycleError, DslError, ParseError, SemanticError
from .netlist import ARITY, FUNCTIONS, Gate, Netlist, parse_netlist, validate_netlist
from .psys import (Port, StructNode, SystemDoc, dump_system, from_system,
                   load_system, parse_multiset, parse_rule, parse_structure,
                   parse_system, print_system, to_system)

__all__ = [
    "ARITY", "FUNCTIONS", "CycleError", "DslError", "Gate", "Netlist",
    "ParseError", "Port", "SemanticError", "StructNode", "SystemDoc",
    "dump_system", "from_system", "load_system", "parse_multiset",
    "parse_netlist", "parse_rule", "parse_structure", "parse_system",
    "print_system", "to_system", "validate_netlist",
]
