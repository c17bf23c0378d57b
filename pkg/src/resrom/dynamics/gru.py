"""GRU latent dynamics trained free-running (closed loop) through time.

The rollout starts from a co-trained linear initial-state map and feeds
its own predictions back as inputs, so the training objective matches
the deployment regime; backpropagation runs through the full horizon
with global gradient-norm clipping. The output map is a tanh with a
trainable per-component gain: latents are standardized to unit variance,
which a bare tanh range cannot cover, while the gained tanh keeps every
rollout bounded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core.errors import DivergenceError, InvariantError
from ..tensorcore import (
    Adam,
    Tensor,
    clip_global_norm,
    concat,
    dense,
    mul,
    sigmoid,
    sum_all,
    tanh,
)
from .common import LatentTrajectory
from .linear import InitStateModel, fit_init

GAIN_INIT = 3.0


@dataclass(frozen=True)
class GruDynModel:
    """Gates over [z_t; u_t; m] and hidden h_t; gained-tanh output map."""

    w_r: np.ndarray  # (d_in, d_h)
    u_r: np.ndarray  # (d_h, d_h)
    b_r: np.ndarray
    w_g: np.ndarray
    u_g: np.ndarray
    b_g: np.ndarray
    w_c: np.ndarray
    u_c: np.ndarray
    b_c: np.ndarray
    w_o: np.ndarray  # (d_h, d_z)
    b_o: np.ndarray
    gain: np.ndarray  # (d_z,)

    def __post_init__(self):
        d_in_w = self.w_r.shape[0]
        d_h = self.u_r.shape[0]
        if self.w_r.shape[1] != d_h or self.w_o.shape[0] != d_h:
            raise InvariantError("GRU gate shapes inconsistent with d_h")
        if d_in_w <= self.d_z + 2:
            raise InvariantError("GRU input must be [z; u; m]")

    @property
    def d_h(self) -> int:
        return self.u_r.shape[0]

    @property
    def d_z(self) -> int:
        return self.w_o.shape[1]

    def begin(self, m):
        return np.zeros(self.d_h)

    def advance(self, carry, z, u, m):
        x = np.concatenate(
            [np.atleast_1d(z), np.atleast_1d(u), np.atleast_1d(m)]
        ).astype(np.float64)
        h = carry
        r = _sigm(x @ self.w_r + h @ self.u_r + self.b_r)
        g = _sigm(x @ self.w_g + h @ self.u_g + self.b_g)
        c = np.tanh(x @ self.w_c + (r * h) @ self.u_c + self.b_c)
        h_new = h + g * (c - h)
        z_next = self.gain * np.tanh(h_new @ self.w_o + self.b_o)
        return z_next, h_new

    def to_arrays(self):
        return [
            self.w_r, self.u_r, self.b_r,
            self.w_g, self.u_g, self.b_g,
            self.w_c, self.u_c, self.b_c,
            self.w_o, self.b_o, self.gain,
        ]

    @classmethod
    def from_arrays(cls, arrays):
        return cls(*arrays)


def _sigm(x):
    return 1.0 / (1.0 + np.exp(-x))


def _buckets(trajectories, batch_size):
    order = sorted(
        range(len(trajectories)), key=lambda i: -trajectories[i].horizon
    )
    return [order[i : i + batch_size] for i in range(0, len(order), batch_size)]


def fit_gru(
    trajectories: list[LatentTrajectory],
    d_h: int,
    epochs: int = 300,
    batch_size: int = 32,
    lr: float = 3e-3,
    grad_clip: float = 1.0,
    seed=0,
    verbose: bool = False,
) -> tuple[GruDynModel, InitStateModel, dict]:
    """Free-running BPTT over full horizons; co-trains the init map."""
    import sys

    usable = [tr for tr in trajectories if tr.horizon >= 1]
    if not usable:
        raise InvariantError("no trajectories with at least one transition")
    d_z = usable[0].d_z
    d_m = usable[0].m.size
    d_in = d_z + 2 + d_m
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

    def gate(fan_in, cols):
        return Tensor(
            rng.normal(0.0, 1.0 / math.sqrt(fan_in), size=(fan_in, cols)),
            requires_grad=True,
        )

    w_r, w_g, w_c = gate(d_in, d_h), gate(d_in, d_h), gate(d_in, d_h)
    u_r, u_g, u_c = gate(d_h, d_h), gate(d_h, d_h), gate(d_h, d_h)
    b_r = Tensor(np.zeros(d_h), requires_grad=True)
    b_g = Tensor(np.full(d_h, -1.0), requires_grad=True)  # slow forgetting
    b_c = Tensor(np.zeros(d_h), requires_grad=True)
    w_o = gate(d_h, d_z)
    b_o = Tensor(np.zeros(d_z), requires_grad=True)
    gain = Tensor(np.full(d_z, GAIN_INIT), requires_grad=True)

    warm = fit_init(
        np.stack([tr.z[0] for tr in usable]), np.stack([tr.m for tr in usable])
    )
    w_i = Tensor(warm.w_i.T.copy(), requires_grad=True)  # (d_m, d_z)
    b_i = Tensor(warm.b_i.copy(), requires_grad=True)

    params = [w_r, u_r, b_r, w_g, u_g, b_g, w_c, u_c, b_c, w_o, b_o, gain, w_i, b_i]
    opt = Adam(params, lr=lr)

    buckets = _buckets(usable, batch_size)
    packed = []
    for bucket in buckets:
        trs = [usable[i] for i in bucket]
        B = len(trs)
        t_max = max(tr.horizon for tr in trs)
        m_mat = np.stack([tr.m for tr in trs])
        u_pad = np.zeros((t_max, B, 2))
        z_pad = np.zeros((t_max + 1, B, d_z))
        w_pad = np.zeros((t_max + 1, B, 1))
        for bi, tr in enumerate(trs):
            T = tr.horizon
            u_pad[:T, bi] = tr.u
            z_pad[: T + 1, bi] = tr.z
            w_pad[: T + 1, bi, 0] = 1.0 / (T + 1)
        packed.append((m_mat, u_pad, z_pad, w_pad, B, t_max))

    history = {"train_loss": []}
    for epoch in range(epochs):
        order = rng.permutation(len(packed))
        losses = []
        for bi in order:
            m_mat, u_pad, z_pad, w_pad, B, t_max = packed[bi]
            m_t = Tensor(m_mat)
            z_hat = dense(m_t, w_i, b_i)
            diff0 = z_hat - Tensor(z_pad[0])
            loss = sum_all(mul(mul(diff0, diff0), Tensor(w_pad[0])))
            h = Tensor(np.zeros((B, d_h)))
            for t in range(t_max):
                x = concat([z_hat, Tensor(u_pad[t]), m_t], axis=1)
                r = sigmoid(dense(x, w_r, b_r) + dense(h, u_r))
                g = sigmoid(dense(x, w_g, b_g) + dense(h, u_g))
                c = tanh(dense(x, w_c, b_c) + dense(mul(r, h), u_c))
                h = h + mul(g, c - h)
                z_hat = mul(tanh(dense(h, w_o, b_o)), gain)
                diff = z_hat - Tensor(z_pad[t + 1])
                loss = loss + sum_all(mul(mul(diff, diff), Tensor(w_pad[t + 1])))
            loss = mul(loss, 1.0 / B)
            lv = loss.item()
            if not np.isfinite(lv):
                raise DivergenceError(f"GRU loss non-finite in epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            clip_global_norm(params, grad_clip)
            opt.step()
            losses.append(lv)
        history["train_loss"].append(float(np.mean(losses)))
        if verbose and (epoch % 10 == 0 or epoch == epochs - 1):
            print(
                f"gru epoch {epoch}: loss={history['train_loss'][-1]:.6f}",
                file=sys.stderr,
            )
    model = GruDynModel(
        w_r=w_r.data.copy(), u_r=u_r.data.copy(), b_r=b_r.data.copy(),
        w_g=w_g.data.copy(), u_g=u_g.data.copy(), b_g=b_g.data.copy(),
        w_c=w_c.data.copy(), u_c=u_c.data.copy(), b_c=b_c.data.copy(),
        w_o=w_o.data.copy(), b_o=b_o.data.copy(), gain=gain.data.copy(),
    )
    init_model = InitStateModel(w_i=w_i.data.T.copy(), b_i=b_i.data.copy())
    return model, init_model, history
