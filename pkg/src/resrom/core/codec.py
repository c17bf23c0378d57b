"""Storage form of the fitted metadata compressors.

The generator fits PCA bases for the per-layer (log10) permeability block
and for the relative-permeability curves resampled on a fixed saturation
grid; this module only holds the fitted arrays and the affine encode /
decode maps so that datasets can be interpreted without the generator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvariantError
from .types import MetadataLayout


@dataclass(frozen=True)
class PcaBlockCodec:
    """Mean-centered truncated-PCA transform for one metadata block."""

    mean: np.ndarray  # (d,)
    components: np.ndarray  # (k, d), orthonormal rows

    def __post_init__(self):
        if self.mean.ndim != 1 or self.components.ndim != 2:
            raise InvariantError("codec arrays have wrong rank")
        if self.components.shape[1] != self.mean.size:
            raise InvariantError("codec component width != mean length")

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def encode(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) @ self.components.T

    def decode(self, coeffs: np.ndarray) -> np.ndarray:
        return np.asarray(coeffs, dtype=np.float64) @ self.components + self.mean


@dataclass(frozen=True)
class MetadataCodec:
    """Layout plus the fitted block compressors for one dataset."""

    layout: MetadataLayout
    perm: PcaBlockCodec  # over per-layer log10 permeability, length nz
    tab: PcaBlockCodec  # over [k_rw; k_ro] sampled on sat_grid
    sat_grid: np.ndarray  # (n_tab_points,), water saturations in [0, 1]

    def to_arrays(self) -> list[np.ndarray]:
        return [
            self.perm.mean,
            self.perm.components,
            self.tab.mean,
            self.tab.components,
            np.asarray(self.sat_grid, dtype=np.float64),
        ]

    @classmethod
    def from_arrays(cls, layout: MetadataLayout, arrays) -> "MetadataCodec":
        if len(arrays) != 5:
            raise InvariantError(f"codec blob holds {len(arrays)} arrays, not 5")
        return cls(
            layout=layout,
            perm=PcaBlockCodec(arrays[0], arrays[1]),
            tab=PcaBlockCodec(arrays[2], arrays[3]),
            sat_grid=arrays[4],
        )
