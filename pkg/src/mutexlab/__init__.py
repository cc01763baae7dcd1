"""mutexlab: explicit-state verification workbench for shared-variable
mutual exclusion protocols.

Three protocols are shipped (a coordinator-based one, its single-writer
variant, and a symmetric election-based one) together with known-bad
mutants; the explorer exhaustively enumerates every interleaving at
small process counts and checks exclusion, deadlock, turn-stability and
lockout-freedom properties mechanically.
"""

from .explorer import (
    DEFAULT_STATE_CAP,
    ExplorationReport,
    StateGraph,
    build_graph,
    check_liveness,
    check_turn_stability,
    explore,
    export_dot,
    max_bypass,
    properties_for,
)
from .kernel import KERNEL
from .model import (
    CANDIDATE,
    FREE,
    REMAINDER,
    THINKING,
    WAITING,
    Configuration,
    Edge,
    ProtocolDefinition,
    apply_edge,
    decode,
    enabled_edges,
    encode,
    initial_configuration,
)
from .protocols import (
    ALL_IDS,
    MUTANT_IDS,
    PROTOCOL_IDS,
    build_asym,
    build_asym_sw,
    build_mutant,
    build_protocol,
    build_sym,
    validate_access_discipline,
    validate_single_access,
)
from .simulator import RunStats, simulate
from .traces import Trace, parse_trace, replay, trace_from_edges

__version__ = "0.1.0"

__all__ = [
    "ALL_IDS",
    "CANDIDATE",
    "Configuration",
    "DEFAULT_STATE_CAP",
    "Edge",
    "ExplorationReport",
    "FREE",
    "KERNEL",
    "MUTANT_IDS",
    "PROTOCOL_IDS",
    "ProtocolDefinition",
    "REMAINDER",
    "RunStats",
    "StateGraph",
    "THINKING",
    "Trace",
    "WAITING",
    "apply_edge",
    "build_asym",
    "build_asym_sw",
    "build_graph",
    "build_mutant",
    "build_protocol",
    "build_sym",
    "check_liveness",
    "check_turn_stability",
    "decode",
    "enabled_edges",
    "encode",
    "explore",
    "export_dot",
    "initial_configuration",
    "max_bypass",
    "parse_trace",
    "properties_for",
    "replay",
    "simulate",
    "trace_from_edges",
    "validate_access_discipline",
    "validate_single_access",
]
