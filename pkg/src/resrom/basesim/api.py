"""Metadata-driven entry points for the base simulator."""
from __future__ import annotations

from typing import Optional

from ..core.types import (
    GridSpec,
    Metadata,
    ReservoirState,
    Scenario,
    STOP_OIL_RATE_M3_PER_DAY,
)
from .engine import UnitSim, simulate_unit


def _unpack(meta: Metadata, grid: GridSpec):
    # Imported lazily: scenariogen owns the metadata layout and itself
    # imports basesim well/property types.
    from ..scenariogen.layout import devectorize, sim_inputs

    record = devectorize(meta, grid)
    sim_grid, props, wells = sim_inputs(record, grid)
    return record, sim_grid, props, wells


def init_state(meta: Metadata, grid: GridSpec) -> ReservoirState:
    """Equilibrium initial state implied by a metadata vector."""
    record, sim_grid, props, wells = _unpack(meta, grid)
    sim = UnitSim(sim_grid, props, wells, p_ref=record.p_init)
    return sim.init_state(record.p_init, record.p_sat, record.woc_depth)


def simulate(
    scenario: Scenario,
    grid: GridSpec,
    stop_oil_rate: float = STOP_OIL_RATE_M3_PER_DAY,
    max_steps: Optional[int] = None,
    verbose: bool = False,
) -> Scenario:
    """Fill a scenario's states and rates by running the base model."""
    record, sim_grid, props, wells = _unpack(scenario.metadata, grid)
    sim = UnitSim(sim_grid, props, wells, p_ref=record.p_init, verbose=verbose)
    states, rates, _diags = simulate_unit(
        sim,
        scenario.controls,
        scenario.dt_days,
        p_init=record.p_init,
        p_sat=record.p_sat,
        woc_depth=record.woc_depth,
        stop_oil_rate=stop_oil_rate,
        max_steps=max_steps,
        verbose=verbose,
    )
    return scenario.with_solution(states, rates)
