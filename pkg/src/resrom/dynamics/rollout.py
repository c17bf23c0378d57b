"""Closed-loop latent rollout shared by every dynamics model."""
from __future__ import annotations

import numpy as np

from ..core.errors import DivergenceError
from .common import LatentTrajectory
from .linear import InitStateModel


def rollout(
    model,
    init_model: InitStateModel,
    m: np.ndarray,
    u: np.ndarray,
) -> LatentTrajectory:
    """Autoregressive latent forecast: |z| = horizon + 1, deterministic.

    Never touches full-order states; aborts with the step index when a
    prediction goes non-finite (an expected failure mode for one-step
    trained models run closed loop).
    """
    m = np.asarray(m, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64).reshape(-1, 2)
    z = np.asarray(init_model.predict(m), dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise DivergenceError("initial latent state non-finite", step_index=0)
    out = [z]
    carry = model.begin(m)
    for t in range(u.shape[0]):
        z, carry = model.advance(carry, z, u[t], m)
        z = np.asarray(z, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(z)):
            raise DivergenceError(
                f"latent rollout diverged at step {t + 1}", step_index=t + 1
            )
        out.append(z)
    return LatentTrajectory(z=np.stack(out), u=u, m=m)
