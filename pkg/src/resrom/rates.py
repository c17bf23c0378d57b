"""Physics-based production rates from consecutive reservoir states.

The development unit has no sources or sinks besides its wells, so
produced volumes follow from the mass balance between two states. Each
cell's fluid is brought to a common reference pressure with the
exponential rock/fluid compressibility factor, summed, and differenced
in time; reference-volume rates convert to surface conditions through
the formation volume factors, with dissolved gas released from the oil
at gamma sm3 per sm3.

These are pure float64 functions with a deterministic summation order;
on base-simulator output they reproduce the reported well rates exactly
(shared accumulation convention). Under the undersaturated assumption
the free-gas reference volume is identically zero, so the gamma term
carries all gas production.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .core.types import Control, GridSpec, Metadata, RateRecord, ReservoirState

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RateContext:
    """Constants needed to evaluate reference-volume mass balances.

    p_ref must sit in the pressure interval with no oil-gas mass
    transfer; we pin it to the initial pressure at the reservoir top.
    """

    p_ref: float  # bar
    v_bulk: float  # m3 per cell
    phi_ref: float
    c_r: float  # 1/bar
    c_o: float
    c_w: float
    c_g: float
    b_o: float  # rm3/sm3 at p_ref
    b_w: float
    b_g: float
    gamma: float  # sm3 gas per sm3 oil
    dt_days: float

    def compressibility(self, fluid: str) -> float:
        return {"oil": self.c_o, "water": self.c_w, "gas": self.c_g}[fluid]


class RefRates(NamedTuple):
    """Production rates at reference conditions, m3/day."""

    oil: float
    water: float
    gas: float


def fluid_volume(state: ReservoirState, fluid: str, ctx: RateContext) -> float:
    """Total volume of one fluid brought to p_ref, in m3."""
    s = {"oil": state.s_oil, "water": state.s_wat}[fluid]
    c_f = ctx.compressibility(fluid)
    factor = np.exp(
        (ctx.c_r - c_f) * (np.asarray(state.pressure, dtype=np.float64) - ctx.p_ref)
    )
    total = float(np.sum(np.asarray(s, dtype=np.float64) * factor))
    return ctx.v_bulk * ctx.phi_ref * total


def production_rate(
    prev: ReservoirState,
    curr: ReservoirState,
    injected_water: float,
    ctx: RateContext,
) -> RefRates:
    """Reference-condition production rates between two states.

    injected_water is the water volume (m3 at p_ref) added over the
    interval. Production is positive when fluid volume decreases.
    """
    if prev.shape != curr.shape:
        raise ValueError("states live on different grids")
    r_oil = (
        fluid_volume(prev, "oil", ctx) - fluid_volume(curr, "oil", ctx)
    ) / ctx.dt_days
    r_wat = (
        fluid_volume(prev, "water", ctx)
        - fluid_volume(curr, "water", ctx)
        + injected_water
    ) / ctx.dt_days
    # No free gas at reservoir conditions: its reference volume is zero.
    return RefRates(oil=r_oil, water=r_wat, gas=0.0)


def surface_rates(ref: RefRates, ctx: RateContext) -> RateRecord:
    """Convert reference-condition rates to surface conditions.

    Small negative values (decoder noise in reconstructed states) are
    clamped to zero and the clamped magnitude is logged.
    """
    raw = {
        "oil": ref.oil / ctx.b_o,
        "water": ref.water / ctx.b_w,
        "gas": ref.gas / ctx.b_g + ctx.gamma * ref.oil,
    }
    clamped = {}
    for name, value in raw.items():
        if value < 0:
            log.debug("clamped negative %s surface rate %.3e to 0", name, value)
            value = 0.0
        clamped[name] = value
    return RateRecord(oil=clamped["oil"], water=clamped["water"], gas=clamped["gas"])


def rates_from_trajectory(
    states: Sequence[ReservoirState],
    controls: Sequence[Control],
    ctx: RateContext,
) -> list[RateRecord]:
    """Surface-rate record per consecutive state pair.

    Injection controls are given at reference conditions, so the
    injected volume per step is inj_rate * dt with no further
    conversion.
    """
    if len(states) < 2:
        raise ValueError("need at least two states")
    if len(controls) < len(states) - 1:
        raise ValueError("fewer controls than state transitions")
    out = []
    for t in range(len(states) - 1):
        injected = controls[t].inj_rate_wat * ctx.dt_days
        ref = production_rate(states[t], states[t + 1], injected, ctx)
        out.append(surface_rates(ref, ctx))
    return out


def context_from_metadata(meta: Metadata, grid: GridSpec, dt_days: float) -> RateContext:
    """Build the rate context a scenario's metadata implies.

    Cell bulk volume comes from the unit sizes stored in the metadata
    (the dataset GridSpec only fixes cell counts and nominal sizes);
    p_ref is the initial pressure at the reservoir top.
    """
    v_bulk = (
        (meta.scalar("size_x") / grid.nx)
        * (meta.scalar("size_y") / grid.ny)
        * (meta.scalar("size_z") / grid.nz)
    )
    return RateContext(
        p_ref=meta.scalar("p_init"),
        v_bulk=v_bulk,
        phi_ref=meta.scalar("phi_ref"),
        c_r=meta.scalar("c_r"),
        c_o=meta.scalar("c_o"),
        c_w=meta.scalar("c_w"),
        c_g=meta.scalar("c_g"),
        b_o=meta.scalar("b_o"),
        b_w=meta.scalar("b_w"),
        b_g=meta.scalar("b_g"),
        gamma=meta.scalar("gamma"),
        dt_days=dt_days,
    )
