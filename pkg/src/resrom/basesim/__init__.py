"""Desk-scale finite-difference base model (two-phase IMPES, dissolved gas)."""

from .api import init_state, simulate
from .engine import StepDiagnostics, UnitSim, simulate_unit
from .props import (
    DARCY_CONST,
    GRAVITY_BAR,
    CoreyParams,
    RockFluidProps,
    SimGrid,
    WellSpec,
    peaceman_wi,
    validate_wells,
)

__all__ = [
    "CoreyParams",
    "DARCY_CONST",
    "GRAVITY_BAR",
    "RockFluidProps",
    "SimGrid",
    "StepDiagnostics",
    "UnitSim",
    "WellSpec",
    "init_state",
    "peaceman_wi",
    "simulate",
    "simulate_unit",
    "validate_wells",
]
