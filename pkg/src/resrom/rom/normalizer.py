"""Per-channel affine normalization of state tensors for the VAE.

Pressure is min-max scaled to [0, 1] over the training set; saturations
are already in [0, 1] and pass through unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.errors import InvariantError


@dataclass(frozen=True)
class Normalizer:
    shift: np.ndarray  # (3,)
    scale: np.ndarray  # (3,)

    def __post_init__(self):
        if np.any(np.asarray(self.scale) <= 0):
            raise InvariantError("normalizer scale must be > 0")

    @classmethod
    def fit(cls, tensors: np.ndarray) -> "Normalizer":
        """tensors: (N, 3, nx, ny, nz); channel 0 is pressure."""
        p = tensors[:, 0]
        p_min = float(p.min())
        p_max = float(p.max())
        if p_max <= p_min:
            p_max = p_min + 1.0
        return cls(
            shift=np.array([p_min, 0.0, 0.0]),
            scale=np.array([p_max - p_min, 1.0, 1.0]),
        )

    def forward(self, tensors: np.ndarray) -> np.ndarray:
        sh = self.shift.reshape(1, 3, 1, 1, 1)
        sc = self.scale.reshape(1, 3, 1, 1, 1)
        return (np.asarray(tensors, dtype=np.float64) - sh) / sc

    def inverse(self, tensors: np.ndarray) -> np.ndarray:
        sh = self.shift.reshape(1, 3, 1, 1, 1)
        sc = self.scale.reshape(1, 3, 1, 1, 1)
        return np.asarray(tensors, dtype=np.float64) * sc + sh

    def to_arrays(self) -> list[np.ndarray]:
        return [self.shift, self.scale]
