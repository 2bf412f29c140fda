"""Self-simulating Wang tile sets and cellular automata at desk scale."""

from .ca import (CARule, CAConfiguration, ColonyCoding, build_simulator, decode_config, encode_config,
                 step_ca, verify_bulking)
from .compiler import CompiledTileSet, compile, compile_direct, direct_min_zoom
from .errors import SelfSimError
from .fixpoint import build_fixpoint, fixpoint_min_zoom, predicate_program
from .machines import MachineProgram, TuringMachine, run_machine, universal_run
from .schedule import ZoomSchedule, validate_schedule
from .verify import (fault_suite, verify_adjacency_equivalence, verify_completeness_small,
                     verify_fixpoint_program, verify_offset_uniqueness)
from .wang import Patch, SimulationMap, Tile, TileSet, find_valid_patch, has_period, is_locally_valid

__version__ = "0.1.0"

__all__ = [
    "CARule", "CAConfiguration", "ColonyCoding", "CompiledTileSet", "MachineProgram", "Patch",
    "SelfSimError", "SimulationMap", "Tile", "TileSet", "TuringMachine", "ZoomSchedule",
    "build_fixpoint", "build_simulator", "compile", "compile_direct", "decode_config",
    "direct_min_zoom", "encode_config", "fault_suite", "find_valid_patch", "fixpoint_min_zoom",
    "has_period", "is_locally_valid", "predicate_program", "run_machine", "step_ca",
    "universal_run", "validate_schedule", "verify_adjacency_equivalence", "verify_bulking",
    "verify_completeness_small", "verify_fixpoint_program", "verify_offset_uniqueness",
]
