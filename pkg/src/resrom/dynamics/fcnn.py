"""One-step fully-connected latent dynamics (teacher-forced training)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core.errors import DivergenceError, InvariantError
from ..tensorcore import Adam, Tensor, dense, lrelu, mul, sum_all
from .common import LatentTrajectory, transitions_matrix

LRELU_SLOPE = 0.01


@dataclass(frozen=True)
class FcnnDynModel:
    """L dense layers, LReLU on hidden layers, linear output."""

    weights: tuple  # of (w (d_in, d_out), b (d_out,))
    slope: float = LRELU_SLOPE

    @property
    def d_z(self) -> int:
        return self.weights[-1][0].shape[1]

    def predict(self, z, u, m):
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        u = np.atleast_2d(np.asarray(u, dtype=np.float64))
        mm = np.asarray(m, dtype=np.float64)
        if mm.ndim == 1:
            mm = np.broadcast_to(mm, (z.shape[0], mm.size))
        h = np.concatenate([z, u, mm], axis=1)
        for i, (w, b) in enumerate(self.weights):
            h = h @ w + b
            if i < len(self.weights) - 1:
                h = np.where(h > 0, h, self.slope * h)
        return h

    def begin(self, m):
        return None

    def advance(self, carry, z, u, m):
        return self.predict(z, u, m)[0], carry

    def to_arrays(self):
        out = []
        for w, b in self.weights:
            out.extend([w, b])
        return out


def fit_fcnn(
    trajectories: list[LatentTrajectory],
    n_layers: int = 3,
    width: int = 128,
    epochs: int = 60,
    batch_size: int = 256,
    lr: float = 1e-3,
    seed=0,
    verbose: bool = False,
) -> tuple[FcnnDynModel, dict]:
    """Minimize one-step L2 error on ground-truth transitions with ADAM."""
    import sys

    x_all, y_all = transitions_matrix(trajectories)
    n, d_in = x_all.shape
    d_z = y_all.shape[1]
    if n_layers < 1:
        raise InvariantError("need at least one layer")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    dims = [d_in] + [width] * (n_layers - 1) + [d_z]
    params = []
    for i in range(n_layers):
        w = Tensor(
            rng.normal(0.0, math.sqrt(2.0 / dims[i]), size=(dims[i], dims[i + 1])),
            requires_grad=True,
        )
        b = Tensor(np.zeros(dims[i + 1]), requires_grad=True)
        params.extend([w, b])
    opt = Adam(params, lr=lr)
    n_batches = max(1, n // batch_size)
    history = {"train_loss": []}
    for epoch in range(epochs):
        perm = rng.permutation(n)
        losses = []
        for bidx in range(n_batches):
            idx = perm[bidx * batch_size : (bidx + 1) * batch_size]
            h = Tensor(x_all[idx])
            for i in range(n_layers):
                h = dense(h, params[2 * i], params[2 * i + 1])
                if i < n_layers - 1:
                    h = lrelu(h, LRELU_SLOPE)
            diff = h - Tensor(y_all[idx])
            loss = mul(sum_all(mul(diff, diff)), 1.0 / len(idx))
            lv = loss.item()
            if not np.isfinite(lv):
                raise DivergenceError(f"FCNN loss non-finite in epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(lv)
        history["train_loss"].append(float(np.mean(losses)))
        if verbose:
            print(
                f"fcnn epoch {epoch}: loss={history['train_loss'][-1]:.6f}",
                file=sys.stderr,
            )
    weights = tuple(
        (params[2 * i].data.copy(), params[2 * i + 1].data.copy())
        for i in range(n_layers)
    )
    return FcnnDynModel(weights=weights, slope=LRELU_SLOPE), history
