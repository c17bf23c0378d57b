"""Convolutional variational autoencoder with deterministic encode/decode.

Encoder: strided 3D conv stages with LReLU, then dense heads for the
posterior mean and log-variance. Decoder mirrors the encoder with
trilinear x2 upsampling (cropped to the recorded stage shapes, so any
grid whose sides survive the stride chain reconstructs exactly) and a
final 1x1x1 conv back to the three field channels. Training maximizes
the Gaussian ELBO (L2 reconstruction plus beta-weighted KL with linear
warm-up); downstream use is deterministic through the posterior mean and
the likelihood mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.errors import DivergenceError, InvariantError
from ..tensorcore import (
    Adam,
    Tensor,
    bias_add_channel,
    conv3d,
    crop3d,
    dense,
    exp,
    lrelu,
    mul,
    reshape,
    sum_all,
    upsample_trilinear,
)
from ..tensorcore import backend
from .normalizer import Normalizer
from .pca import clamp_state_tensor

LRELU_SLOPE = 0.01


@dataclass(frozen=True)
class VaeArch:
    d_z: int
    channels: tuple = (16, 32)
    kernel: int = 3
    strides: tuple = (2, 2)
    lrelu_slope: float = LRELU_SLOPE

    def __post_init__(self):
        if len(self.channels) != len(self.strides) or not self.channels:
            raise InvariantError("channels and strides must align (>= 1 stage)")
        if any(s not in (1, 2) for s in self.strides):
            raise InvariantError("stage strides must be 1 or 2")


def _stage_shapes(grid_shape, strides):
    """Spatial shape entering each stage plus the latent spatial shape."""
    shapes = [tuple(grid_shape)]
    for s in strides:
        shapes.append(tuple(-(-dim // s) for dim in shapes[-1]))  # ceil div
    return shapes


def _he(rng, shape, fan_in, gain=2.0):
    return rng.normal(0.0, math.sqrt(gain / fan_in), size=shape)


def init_params(arch: VaeArch, grid_shape, rng: np.random.Generator) -> dict:
    """Seeded parameter dictionary (insertion order is the save order)."""
    params: dict[str, np.ndarray] = {}
    k = arch.kernel
    c_prev = 3
    for i, c in enumerate(arch.channels):
        params[f"enc_w{i}"] = _he(rng, (c, c_prev, k, k, k), c_prev * k**3)
        params[f"enc_b{i}"] = np.zeros(c)
        c_prev = c
    shapes = _stage_shapes(grid_shape, arch.strides)
    feat = arch.channels[-1] * int(np.prod(shapes[-1]))
    params["mu_w"] = _he(rng, (feat, arch.d_z), feat, gain=1.0)
    params["mu_b"] = np.zeros(arch.d_z)
    params["lv_w"] = 0.1 * _he(rng, (feat, arch.d_z), feat, gain=1.0)
    params["lv_b"] = np.full(arch.d_z, -4.0)
    params["dec_dense_w"] = _he(rng, (arch.d_z, feat), arch.d_z, gain=1.0)
    params["dec_dense_b"] = np.zeros(feat)
    chain = [3] + list(arch.channels)  # encoder widths
    for i in range(len(arch.channels)):
        c_in = chain[-1 - i]
        c_out = chain[-2 - i] if len(chain) - 2 - i >= 1 else chain[1]
        params[f"dec_w{i}"] = _he(rng, (c_out, c_in, k, k, k), c_in * k**3)
        params[f"dec_b{i}"] = np.zeros(c_out)
    c_last = chain[1]
    params["out_w"] = _he(rng, (3, c_last, 1, 1, 1), c_last, gain=1.0)
    params["out_b"] = np.zeros(3)
    return params


class VaeModel:
    """Trained reducer; inference is plain numpy (no tape)."""

    def __init__(
        self,
        arch: VaeArch,
        grid_shape: tuple,
        normalizer: Normalizer,
        params: dict,
    ):
        self.arch = arch
        self.grid_shape = tuple(grid_shape)
        self.normalizer = normalizer
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        self.stage_shapes = _stage_shapes(self.grid_shape, arch.strides)

    @property
    def d_z(self) -> int:
        return self.arch.d_z

    # -- inference (numpy) -------------------------------------------------

    def _enc_features(self, x: np.ndarray) -> np.ndarray:
        a = self.arch
        pad = a.kernel // 2
        h = x
        for i, s in enumerate(a.strides):
            h = backend.conv3d_forward(
                h, self.params[f"enc_w{i}"], (s, s, s), (pad, pad, pad)
            )
            h = h + self.params[f"enc_b{i}"][None, :, None, None, None]
            h = np.where(h > 0, h, a.lrelu_slope * h)
        return h.reshape(h.shape[0], -1)

    def encode_mu(self, tensors_norm: np.ndarray) -> np.ndarray:
        """Posterior mean for a batch of normalized tensors."""
        feats = self._enc_features(np.asarray(tensors_norm, dtype=np.float64))
        return feats @ self.params["mu_w"] + self.params["mu_b"]

    def encode_states(self, tensors_raw: np.ndarray, batch: int = 256) -> np.ndarray:
        """Deterministic latents for raw (denormalized) state tensors."""
        out = []
        for i in range(0, tensors_raw.shape[0], batch):
            x = self.normalizer.forward(tensors_raw[i : i + batch])
            out.append(self.encode_mu(x))
        return np.concatenate(out, axis=0)

    def decode_norm(self, z: np.ndarray) -> np.ndarray:
        """Likelihood mean in normalized units, (N, 3, nx, ny, nz)."""
        a = self.arch
        pad = a.kernel // 2
        z = np.asarray(z, dtype=np.float64)
        h = z @ self.params["dec_dense_w"] + self.params["dec_dense_b"]
        h = np.where(h > 0, h, a.lrelu_slope * h)
        h = h.reshape(z.shape[0], a.channels[-1], *self.stage_shapes[-1])
        n_stage = len(a.strides)
        for i in range(n_stage):
            stride = a.strides[n_stage - 1 - i]
            target = self.stage_shapes[n_stage - 1 - i]
            if stride == 2:
                h = backend.upsample2_forward(h)
                h = np.ascontiguousarray(
                    h[:, :, : target[0], : target[1], : target[2]]
                )
            h = backend.conv3d_forward(
                h, self.params[f"dec_w{i}"], (1, 1, 1), (pad, pad, pad)
            )
            h = h + self.params[f"dec_b{i}"][None, :, None, None, None]
            h = np.where(h > 0, h, a.lrelu_slope * h)
        h = backend.conv3d_forward(h, self.params["out_w"], (1, 1, 1), (0, 0, 0))
        return h + self.params["out_b"][None, :, None, None, None]

    def decode_states(self, z: np.ndarray, batch: int = 256) -> np.ndarray:
        """Denormalized, clamped state tensors for a batch of latents."""
        outs = []
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        for i in range(0, z.shape[0], batch):
            raw = self.normalizer.inverse(self.decode_norm(z[i : i + batch]))
            outs.append(clamp_state_tensor(raw))
        return np.concatenate(outs, axis=0)

    # -- training graph (autodiff) ------------------------------------------

    def _graph_params(self) -> dict:
        return {k: Tensor(v, requires_grad=True) for k, v in self.params.items()}

    def to_arrays(self) -> list[np.ndarray]:
        return (
            self.normalizer.to_arrays()
            + [np.asarray(self.grid_shape, dtype=np.float64)]
            + [self.params[k] for k in self.params]
        )

    def param_names(self) -> list[str]:
        return list(self.params.keys())


def _encoder_graph(params, arch: VaeArch, x: Tensor):
    pad = arch.kernel // 2
    h = x
    for i, s in enumerate(arch.strides):
        h = conv3d(h, params[f"enc_w{i}"], (s, s, s), (pad, pad, pad))
        h = bias_add_channel(h, params[f"enc_b{i}"])
        h = lrelu(h, arch.lrelu_slope)
    n = h.shape[0]
    h = reshape(h, (n, -1))
    mu = dense(h, params["mu_w"], params["mu_b"])
    lv = dense(h, params["lv_w"], params["lv_b"])
    return mu, lv


def _decoder_graph(params, arch: VaeArch, stage_shapes, z: Tensor):
    pad = arch.kernel // 2
    h = dense(z, params["dec_dense_w"], params["dec_dense_b"])
    h = lrelu(h, arch.lrelu_slope)
    n = h.shape[0]
    h = reshape(h, (n, arch.channels[-1], *stage_shapes[-1]))
    n_stage = len(arch.strides)
    for i in range(n_stage):
        stride = arch.strides[n_stage - 1 - i]
        target = stage_shapes[n_stage - 1 - i]
        if stride == 2:
            h = upsample_trilinear(h)
            h = crop3d(h, target)
        h = conv3d(h, params[f"dec_w{i}"], (1, 1, 1), (pad, pad, pad))
        h = bias_add_channel(h, params[f"dec_b{i}"])
        h = lrelu(h, arch.lrelu_slope)
    h = conv3d(h, params["out_w"], (1, 1, 1), (0, 0, 0))
    return bias_add_channel(h, params["out_b"])


def kl_standard_normal(mu: Tensor, lv: Tensor) -> Tensor:
    """KL(q || N(0, I)) summed over the batch."""
    term = Tensor(np.ones(1)) + lv - mul(mu, mu) - exp(lv)
    return mul(sum_all(term), -0.5)


def vae_train(
    train_tensors: np.ndarray,
    val_tensors: np.ndarray,
    d_z: int,
    epochs: int,
    batch_size: int,
    seed,
    lr: float = 1e-3,
    beta: float = 1e-3,
    beta_warmup_frac: float = 0.1,
    channels: tuple = (16, 32),
    kernel: int = 3,
    strides: tuple = (2, 2),
    lrelu_slope: float = LRELU_SLOPE,
    normalizer: Optional[Normalizer] = None,
    verbose: bool = False,
) -> tuple[VaeModel, dict]:
    """Train on raw state tensors; returns the best-validation model.

    History holds per-epoch mean training loss and validation
    reconstruction error (0.5 L2 in normalized units).
    """
    import sys

    arch = VaeArch(
        d_z=d_z,
        channels=tuple(channels),
        kernel=kernel,
        strides=tuple(strides),
        lrelu_slope=lrelu_slope,
    )
    grid_shape = tuple(train_tensors.shape[2:])
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    if normalizer is None:
        normalizer = Normalizer.fit(np.asarray(train_tensors))
    model = VaeModel(arch, grid_shape, normalizer, init_params(arch, grid_shape, rng))

    params = model._graph_params()
    opt = Adam(list(params.values()), lr=lr)
    n = train_tensors.shape[0]
    n_batches = max(1, n // batch_size)
    total_steps = epochs * n_batches
    warmup_steps = max(1, int(beta_warmup_frac * total_steps))
    history = {"train_loss": [], "val_recon": []}
    best_val = np.inf
    best_params = {k: t.data.copy() for k, t in params.items()}
    step = 0
    for epoch in range(epochs):
        perm = rng.permutation(n)
        epoch_losses = []
        for b in range(n_batches):
            idx = perm[b * batch_size : (b + 1) * batch_size]
            x_np = normalizer.forward(train_tensors[idx])
            x = Tensor(x_np)
            mu, lv = _encoder_graph(params, arch, x)
            eps = rng.standard_normal(mu.shape)
            z = mu + mul(exp(mul(lv, 0.5)), Tensor(eps))
            xhat = _decoder_graph(params, arch, model.stage_shapes, z)
            diff = xhat - x
            recon = mul(sum_all(mul(diff, diff)), 0.5 / len(idx))
            kl = mul(kl_standard_normal(mu, lv), 1.0 / len(idx))
            beta_t = beta * min(1.0, (step + 1) / warmup_steps)
            loss = recon + mul(kl, beta_t)
            loss_val = loss.item()
            if not np.isfinite(loss_val):
                raise DivergenceError(
                    f"VAE loss became non-finite at step {step}", step_index=step
                )
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_losses.append(loss_val)
            step += 1
        # Deterministic validation reconstruction through the means.
        model.params = {k: t.data for k, t in params.items()}
        val_err = _val_recon(model, val_tensors, batch_size)
        history["train_loss"].append(float(np.mean(epoch_losses)))
        history["val_recon"].append(val_err)
        if val_err < best_val:
            best_val = val_err
            best_params = {k: t.data.copy() for k, t in params.items()}
        if verbose:
            print(
                f"vae epoch {epoch}: loss={history['train_loss'][-1]:.5f} "
                f"val={val_err:.5f}",
                file=sys.stderr,
            )
    model.params = best_params
    return model, history


def _val_recon(model: VaeModel, val_tensors: np.ndarray, batch: int) -> float:
    total = 0.0
    n = val_tensors.shape[0]
    for i in range(0, n, batch):
        x = model.normalizer.forward(val_tensors[i : i + batch])
        mu = model.encode_mu(x)
        xhat = model.decode_norm(mu)
        total += 0.5 * float(np.sum((xhat - x) ** 2))
    return total / n
