"""Metamodel forecast: latent rollout, batched decode, physics-based rates."""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from ..core.types import Metadata, RateRecord, ReservoirState
from ..dynamics import rollout
from ..rates import context_from_metadata, production_rate, surface_rates
from .bundle import MetamodelBundle


@dataclass
class ForecastTiming:
    rollout_s: float = 0.0
    decode_s: float = 0.0
    rates_s: float = 0.0

    def __iadd__(self, other):
        self.rollout_s += other.rollout_s
        self.decode_s += other.decode_s
        self.rates_s += other.rates_s
        return self


def forecast(
    bundle: MetamodelBundle,
    metadata: Metadata,
    controls,
    decode_stride: int = 1,
    timing: ForecastTiming | None = None,
) -> tuple[list[ReservoirState], list[RateRecord]]:
    """Predict states (every decode_stride steps) and production rates.

    The rollout runs for the full control horizon in latent space; full
    states are decoded only at the requested stride (the final state is
    always included). Rates come from the decoded states through the
    mass-balance formulas, with injected volume aggregated per decode
    window.
    """
    if decode_stride < 1:
        raise ValueError("decode_stride must be >= 1")
    t0 = time.perf_counter()
    m_raw = np.asarray(metadata.vector, dtype=np.float64)
    u_raw = (
        np.stack([c.as_vector() for c in controls])
        if len(controls)
        else np.zeros((0, 2))
    )
    m_s = bundle.m_std.transform(m_raw)
    u_s = bundle.u_std.transform(u_raw) if len(u_raw) else u_raw
    traj = rollout(bundle.dynamics, bundle.init_model, m_s, u_s)
    z = bundle.z_std.inverse(traj.z)  # (T+1, d_z) in reducer space
    t1 = time.perf_counter()

    horizon = len(controls)
    idx = list(range(0, horizon + 1, decode_stride))
    if idx[-1] != horizon:
        idx.append(horizon)
    if bundle.reducer_kind == "pca":
        tensors = bundle.reducer.decode_tensor(z[idx])
    else:
        tensors = bundle.reducer.decode_states(z[idx])
    states = [
        ReservoirState(
            pressure=tensors[j, 0],
            s_oil=tensors[j, 1],
            s_wat=tensors[j, 2],
            time_index=t_idx,
        )
        for j, t_idx in enumerate(idx)
    ]
    t2 = time.perf_counter()

    rates: list[RateRecord] = []
    if len(states) >= 2:
        ctx = context_from_metadata(metadata, bundle.grid, bundle.dt_days)
        for k, (a, b) in enumerate(zip(idx[:-1], idx[1:])):
            ctx_k = replace(ctx, dt_days=(b - a) * bundle.dt_days)
            injected = sum(
                controls[t].inj_rate_wat for t in range(a, b)
            ) * bundle.dt_days
            ref = production_rate(states[k], states[k + 1], injected, ctx_k)
            rates.append(surface_rates(ref, ctx_k))
    t3 = time.perf_counter()
    if timing is not None:
        timing += ForecastTiming(t1 - t0, t2 - t1, t3 - t2)
    return states, rates
