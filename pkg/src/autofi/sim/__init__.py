"""Simplified vehicle plant, virtual signal bus and fault interposition."""

from .cycle import DrivingCycle, default_cycle
from .plant import PlantConfig, PlantState, SpeedController, initial_state, step_plant
from .run import PaceMode, Pacer, run_golden, run_with_faults
from .trace import SHADOW_SUFFIX, Trace, load_trace, save_trace

__all__ = [
    "DrivingCycle",
    "default_cycle",
    "PlantConfig",
    "PlantState",
    "SpeedController",
    "initial_state",
    "step_plant",
    "PaceMode",
    "Pacer",
    "run_golden",
    "run_with_faults",
    "SHADOW_SUFFIX",
    "Trace",
    "load_trace",
    "save_trace",
]
