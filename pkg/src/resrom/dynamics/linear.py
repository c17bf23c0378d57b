"""Analytic (least-squares) latent dynamics and initial-state maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.errors import InvariantError
from .common import LatentTrajectory, transitions_matrix

RIDGE_DEFAULT = 1e-8


def ridge_solve(x: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    """Solve min ||x w - y||^2 + ridge ||w||^2 by normal equations."""
    gram = x.T @ x + ridge * np.eye(x.shape[1])
    try:
        return np.linalg.solve(gram, x.T @ y)
    except np.linalg.LinAlgError as e:
        raise InvariantError(f"design matrix rank-deficient beyond damping: {e}")


@dataclass(frozen=True)
class LinearDynModel:
    """z_{t+1} = W_z z_t + W_u u_t + W_m m + b (Markovian)."""

    w_z: np.ndarray  # (d_z, d_z)
    w_u: np.ndarray  # (d_z, 2)
    w_m: np.ndarray  # (d_z, d_m)
    b: np.ndarray  # (d_z,)

    def __post_init__(self):
        for a in (self.w_z, self.w_u, self.w_m, self.b):
            if not np.all(np.isfinite(a)):
                raise InvariantError("linear dynamics parameters must be finite")

    @property
    def d_z(self) -> int:
        return self.w_z.shape[0]

    def predict(self, z, u, m):
        z = np.asarray(z, dtype=np.float64)
        return z @ self.w_z.T + np.asarray(u) @ self.w_u.T + np.asarray(m) @ self.w_m.T + self.b

    def begin(self, m):
        return None

    def advance(self, carry, z, u, m):
        return self.predict(z, u, m), carry

    def to_arrays(self):
        return [self.w_z, self.w_u, self.w_m, self.b]

    def objective(self, trajectories, ridge: float = RIDGE_DEFAULT) -> float:
        """The damped one-step objective this model minimizes."""
        x, y = transitions_matrix(trajectories)
        theta = np.concatenate(
            [self.w_z.T, self.w_u.T, self.w_m.T, self.b[None, :]], axis=0
        )
        xb = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
        resid = xb @ theta - y
        return float(np.sum(resid**2) + ridge * np.sum(theta**2))


@dataclass(frozen=True)
class InitStateModel:
    """Direct linear map from metadata to the initial latent state."""

    w_i: np.ndarray  # (d_z, d_m)
    b_i: np.ndarray  # (d_z,)

    def __post_init__(self):
        if not (np.all(np.isfinite(self.w_i)) and np.all(np.isfinite(self.b_i))):
            raise InvariantError("init-state parameters must be finite")

    def predict(self, m):
        return np.asarray(m, dtype=np.float64) @ self.w_i.T + self.b_i

    def to_arrays(self):
        return [self.w_i, self.b_i]


def fit_linear(
    trajectories: list[LatentTrajectory], ridge: float = RIDGE_DEFAULT
) -> LinearDynModel:
    """Ordinary least squares over all one-step transitions."""
    x, y = transitions_matrix(trajectories)
    d_z = y.shape[1]
    d_m = trajectories[0].m.size
    if x.shape[0] < d_z + d_m + 3:
        raise InvariantError(
            f"need at least {d_z + d_m + 3} transitions, got {x.shape[0]}"
        )
    xb = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
    theta = ridge_solve(xb, y, ridge)  # (d_z + 2 + d_m + 1, d_z)
    return LinearDynModel(
        w_z=theta[:d_z].T,
        w_u=theta[d_z : d_z + 2].T,
        w_m=theta[d_z + 2 : d_z + 2 + d_m].T,
        b=theta[-1],
    )


def fit_init(
    z0: np.ndarray, m: np.ndarray, ridge: float = RIDGE_DEFAULT
) -> InitStateModel:
    """OLS of initial latents on metadata vectors."""
    z0 = np.asarray(z0, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if z0.shape[0] != m.shape[0]:
        raise InvariantError("z0 and m counts differ")
    if z0.shape[0] < m.shape[1] + 1:
        raise InvariantError(
            f"need at least d_m+1={m.shape[1] + 1} samples, got {z0.shape[0]}"
        )
    mb = np.concatenate([m, np.ones((m.shape[0], 1))], axis=1)
    theta = ridge_solve(mb, z0, ridge)
    return InitStateModel(w_i=theta[:-1].T, b_i=theta[-1])
