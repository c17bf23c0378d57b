"""Shared latent-dynamics plumbing: trajectories and standardization.

All dynamics models operate in standardized coordinates (zero mean,
unit variance per component over the training set) for latents,
controls and metadata alike; the fitted statistics travel with the
model bundle and are inverted before decoding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.errors import InvariantError


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=np.float64)
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)  # constant columns pass through
        return cls(mean=mean, std=std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) * self.std + self.mean

    def to_arrays(self) -> list[np.ndarray]:
        return [self.mean, self.std]


@dataclass(frozen=True)
class LatentTrajectory:
    """One scenario in latent space: z_0..z_T, u_0..u_{T-1}, metadata m."""

    z: np.ndarray  # (T+1, d_z)
    u: np.ndarray  # (T, 2)
    m: np.ndarray  # (d_m,)

    def __post_init__(self):
        if self.z.ndim != 2 or self.u.ndim != 2 or self.m.ndim != 1:
            raise InvariantError("latent trajectory arrays have wrong rank")
        if self.z.shape[0] != self.u.shape[0] + 1:
            raise InvariantError(
                f"|z|={self.z.shape[0]} must equal |u|+1={self.u.shape[0] + 1}"
            )

    @property
    def horizon(self) -> int:
        return self.u.shape[0]

    @property
    def d_z(self) -> int:
        return self.z.shape[1]


def transitions_matrix(trajectories) -> tuple[np.ndarray, np.ndarray]:
    """Stack all one-step transitions: X = [z_t, u_t, m], Y = z_{t+1}."""
    xs, ys = [], []
    for tr in trajectories:
        T = tr.horizon
        if T < 1:
            continue
        m_rep = np.broadcast_to(tr.m, (T, tr.m.size))
        xs.append(np.concatenate([tr.z[:-1], tr.u, m_rep], axis=1))
        ys.append(tr.z[1:])
    if not xs:
        raise InvariantError("no transitions available")
    return np.concatenate(xs, axis=0), np.concatenate(ys, axis=0)
