"""ADAM optimizer with bias correction, plus global gradient-norm clipping."""
from __future__ import annotations

import numpy as np

from .autodiff import Tensor


def adam_step(params, grads, m, v, t, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """One functional ADAM update over parallel lists of arrays.

    Returns (new_params, new_m, new_v); t is the 1-based step index.
    """
    new_p, new_m, new_v = [], [], []
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for p, g, mi, vi in zip(params, grads, m, v):
        mi = beta1 * mi + (1.0 - beta1) * g
        vi = beta2 * vi + (1.0 - beta2) * g * g
        m_hat = mi / bc1
        v_hat = vi / bc2
        new_p.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(mi)
        new_v.append(vi)
    return new_p, new_m, new_v


def clip_global_norm(tensors, max_norm: float) -> float:
    """Scale .grad of all tensors so the joint L2 norm is <= max_norm."""
    total = 0.0
    for t in tensors:
        if t.grad is not None:
            total += float((t.grad * t.grad).sum())
    norm = np.sqrt(total)
    if norm > max_norm and norm > 0:
        scale = max_norm / norm
        for t in tensors:
            if t.grad is not None:
                t.grad *= scale
    return norm


class Adam:
    """Stateful wrapper applying :func:`adam_step` to Tensor parameters."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params: list[Tensor] = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.t += 1
        grads = [
            p.grad if p.grad is not None else np.zeros_like(p.data)
            for p in self.params
        ]
        new_p, self.m, self.v = adam_step(
            [p.data for p in self.params],
            grads,
            self.m,
            self.v,
            self.t,
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
        )
        for p, d in zip(self.params, new_p):
            p.data = d
