"""Mean-centered truncated-SVD principal component analysis.

The reducer flattens reservoir states into rows, removes the mean and
keeps the leading right singular vectors. The factorization runs through
the Gram matrix on the smaller side (deterministic symmetric
eigendecomposition), with a deterministic orthonormal completion for
rank-deficient data so zero-variance directions still yield a valid
basis.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core.errors import InvariantError
from ..core.types import ReservoirState

_RANK_TOL = 1e-10


def truncated_components(xc: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k singular values and right singular vectors of centered xc.

    Returns (s (k,), vt (k, d)) with orthonormal rows of vt. Directions
    with negligible singular value are completed deterministically from
    the standard basis.
    """
    xc = np.asarray(xc, dtype=np.float64)
    n, d = xc.shape
    if not (1 <= k <= min(n, d)):
        raise InvariantError(f"k={k} must lie in [1, min(n={n}, d={d})]")
    if n <= d:
        gram = xc @ xc.T
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1][:k]
        lam = np.maximum(evals[order], 0.0)
        s = np.sqrt(lam)
        u = evecs[:, order]
        smax = s[0] if s[0] > 0 else 1.0
        rows = []
        for i in range(k):
            if s[i] > _RANK_TOL * smax and s[i] > 0:
                rows.append((xc.T @ u[:, i]) / s[i])
            else:
                rows.append(None)
        vt = _complete_rows(rows, d)
    else:
        gram = xc.T @ xc
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1][:k]
        lam = np.maximum(evals[order], 0.0)
        s = np.sqrt(lam)
        vt = np.ascontiguousarray(evecs[:, order].T)
    return s, vt


def _complete_rows(rows: list, d: int) -> np.ndarray:
    """Replace None rows with standard-basis vectors orthogonal to the rest."""
    fixed = [r for r in rows if r is not None]
    out = []
    basis_iter = iter(range(d))
    for r in rows:
        if r is not None:
            out.append(r)
            continue
        for j in basis_iter:
            cand = np.zeros(d)
            cand[j] = 1.0
            for prev in out + fixed:
                cand -= (cand @ prev) * prev
            norm = np.linalg.norm(cand)
            if norm > 1e-8:
                out.append(cand / norm)
                break
        else:
            raise InvariantError("could not complete orthonormal basis")
    return np.stack(out)


@dataclass(frozen=True)
class PcaModel:
    """Linear reducer: encode = Vt (f - mean), decode = V z + mean."""

    mean: np.ndarray  # (3*nx*ny*nz,)
    components: np.ndarray  # (d_z, 3*nx*ny*nz), orthonormal rows
    singular_values: np.ndarray  # (d_z,)
    grid_shape: tuple  # (nx, ny, nz)

    def __post_init__(self):
        gram = self.components @ self.components.T
        if np.max(np.abs(gram - np.eye(self.d_z))) > 1e-8:
            raise InvariantError("PCA components are not orthonormal")

    @property
    def d_z(self) -> int:
        return self.components.shape[0]

    def encode(self, state: ReservoirState) -> np.ndarray:
        flat = state.as_tensor(np.float64).ravel()
        return self.components @ (flat - self.mean)

    def encode_tensor(self, tensors: np.ndarray) -> np.ndarray:
        """Encode a batch (N, 3, nx, ny, nz) -> (N, d_z)."""
        flat = tensors.reshape(tensors.shape[0], -1).astype(np.float64)
        return (flat - self.mean) @ self.components.T

    def decode(self, z: np.ndarray, time_index: int = 0) -> ReservoirState:
        return state_from_flat(
            self.mean + np.asarray(z, dtype=np.float64) @ self.components,
            self.grid_shape,
            time_index,
        )

    def decode_tensor(self, z: np.ndarray) -> np.ndarray:
        """Decode a batch (N, d_z) -> clamped tensors (N, 3, nx, ny, nz)."""
        flat = self.mean + np.asarray(z, dtype=np.float64) @ self.components
        tens = flat.reshape(-1, 3, *self.grid_shape)
        return clamp_state_tensor(tens)

    def to_arrays(self) -> list[np.ndarray]:
        return [self.mean, self.components, self.singular_values]

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray], grid_shape) -> "PcaModel":
        return cls(
            mean=arrays[0],
            components=arrays[1],
            singular_values=arrays[2],
            grid_shape=tuple(grid_shape),
        )


def clamp_state_tensor(tens: np.ndarray) -> np.ndarray:
    """Make decoded tensors physically admissible.

    Saturations are clamped to [0, 1] and jointly rescaled where their
    sum exceeds 1 (implicit gas saturation stays nonnegative); pressure
    is floored at a tiny positive value.
    """
    out = np.array(tens, dtype=np.float64)
    out[:, 0] = np.maximum(out[:, 0], 1e-3)
    out[:, 1:] = np.clip(out[:, 1:], 0.0, 1.0)
    total = out[:, 1] + out[:, 2]
    over = total > 1.0
    if np.any(over):
        scale = np.where(over, 1.0 / np.maximum(total, 1e-300), 1.0)
        out[:, 1] *= scale
        out[:, 2] *= scale
    return out


def state_from_flat(flat: np.ndarray, grid_shape, time_index: int = 0) -> ReservoirState:
    tens = clamp_state_tensor(flat.reshape(1, 3, *grid_shape))[0]
    return ReservoirState(
        pressure=tens[0], s_oil=tens[1], s_wat=tens[2], time_index=time_index
    )


def pca_fit(
    states: Sequence[ReservoirState] | np.ndarray,
    d_z: int,
    grid_shape: Optional[tuple] = None,
) -> PcaModel:
    """Fit the reducer on sampled states (list or (N, 3, nx, ny, nz))."""
    if isinstance(states, np.ndarray):
        if grid_shape is None:
            grid_shape = tuple(states.shape[2:])
        x = states.reshape(states.shape[0], -1).astype(np.float64)
    else:
        if not states:
            raise InvariantError("no states to fit")
        grid_shape = states[0].shape
        x = np.stack([s.as_tensor(np.float64).ravel() for s in states])
    if x.shape[0] < d_z:
        raise InvariantError(f"need at least d_z={d_z} samples, got {x.shape[0]}")
    mean = x.mean(axis=0)
    s, vt = truncated_components(x - mean, d_z)
    return PcaModel(
        mean=mean, components=vt, singular_values=s, grid_shape=tuple(grid_shape)
    )
