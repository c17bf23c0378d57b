"""Pure-numpy kernel backend (fallback when the compiled core is absent).

All primitives take float64 C-contiguous arrays. Convolution inputs arrive
already zero-padded; the dispatcher in `backend` handles padding/cropping.
Everything reduces to BLAS matmuls or bincount scatters, so results are
deterministic.
"""
from __future__ import annotations

import numpy as np

_col2im_cache: dict = {}
_upmat_cache: dict = {}


def _windows(xp: np.ndarray, kd, kh, kw, sd, sh, sw) -> np.ndarray:
    """Strided view (N, od, oh, ow, C, kd, kh, kw) over the padded input."""
    N, C, Dp, Hp, Wp = xp.shape
    od = (Dp - kd) // sd + 1
    oh = (Hp - kh) // sh + 1
    ow = (Wp - kw) // sw + 1
    sN, sC, sD, sH, sW = xp.strides
    shape = (N, od, oh, ow, C, kd, kh, kw)
    strides = (sN, sD * sd, sH * sh, sW * sw, sC, sD, sH, sW)
    return np.lib.stride_tricks.as_strided(xp, shape, strides)


def conv3d_forward(xp, w, sd, sh, sw):
    O = w.shape[0]
    win = _windows(xp, *w.shape[2:], sd, sh, sw)
    N, od, oh, ow = win.shape[:4]
    cols = win.reshape(N * od * oh * ow, -1)
    out = cols @ w.reshape(O, -1).T
    return np.ascontiguousarray(
        out.reshape(N, od, oh, ow, O).transpose(0, 4, 1, 2, 3)
    )


def conv3d_backward_kernel(xp, dout, kd, kh, kw, sd, sh, sw):
    N, O, od, oh, ow = dout.shape
    win = _windows(xp, kd, kh, kw, sd, sh, sw)
    cols = win.reshape(N * od * oh * ow, -1)
    dflat = dout.transpose(0, 2, 3, 4, 1).reshape(-1, O)
    dw = dflat.T @ cols
    C = xp.shape[1]
    return np.ascontiguousarray(dw.reshape(O, C, kd, kh, kw))


def _col2im_indices(C, Dp, Hp, Wp, kd, kh, kw, sd, sh, sw, od, oh, ow):
    """Flat scatter index into (C*Dp*Hp*Wp) per (position, C*kd*kh*kw)."""
    dpos = (np.arange(od) * sd)[:, None] + np.arange(kd)[None, :]  # (od, kd)
    hpos = (np.arange(oh) * sh)[:, None] + np.arange(kh)[None, :]
    wpos = (np.arange(ow) * sw)[:, None] + np.arange(kw)[None, :]
    # positions ordered (od, oh, ow); taps ordered (C, kd, kh, kw)
    d = dpos[:, None, None, None, :, None, None]  # od,1,1 | 1,kd,1,1
    h = hpos[None, :, None, None, None, :, None]
    w_ = wpos[None, None, :, None, None, None, :]
    c = np.arange(C)[None, None, None, :, None, None, None]
    flat = ((c * Dp + d) * Hp + h) * Wp + w_
    return np.ascontiguousarray(
        flat.reshape(od * oh * ow, C * kd * kh * kw), dtype=np.int64
    )


def conv3d_backward_input(dout, w, Dp, Hp, Wp, sd, sh, sw):
    N, O, od, oh, ow = dout.shape
    _, C, kd, kh, kw = w.shape
    dflat = dout.transpose(0, 2, 3, 4, 1).reshape(-1, O)
    dcols = dflat @ w.reshape(O, -1)  # (N*P, C*k3)
    key = (C, Dp, Hp, Wp, kd, kh, kw, sd, sh, sw, od, oh, ow)
    idx = _col2im_cache.get(key)
    if idx is None:
        idx = _col2im_indices(*key)
        _col2im_cache[key] = idx
    m = C * Dp * Hp * Wp
    tiled = (idx[None, :, :] + (np.arange(N) * m)[:, None, None]).ravel()
    dxp = np.bincount(tiled, weights=dcols.ravel(), minlength=N * m)
    return dxp.reshape(N, C, Dp, Hp, Wp)


def _upmat(n: int) -> np.ndarray:
    """(2n, n) matrix of 1D linear interpolation, align_corners=False."""
    M = _upmat_cache.get(n)
    if M is not None:
        return M
    M = np.zeros((2 * n, n))
    for o in range(2 * n):
        src = (o + 0.5) / 2.0 - 0.5
        i0 = int(np.floor(src))
        f = src - i0
        lo = min(max(i0, 0), n - 1)
        hi = min(max(i0 + 1, 0), n - 1)
        M[o, lo] += 1.0 - f
        M[o, hi] += f
    _upmat_cache[n] = M
    return M


def _apply_axis(x, M, axis):
    return np.moveaxis(np.tensordot(M, x, axes=(1, axis)), 0, axis)


def upsample2_forward(x):
    N, C, D, H, W = x.shape
    y = _apply_axis(x, _upmat(D), 2)
    y = _apply_axis(y, _upmat(H), 3)
    y = _apply_axis(y, _upmat(W), 4)
    return np.ascontiguousarray(y)


def upsample2_backward(dy):
    N, C, D2, H2, W2 = dy.shape
    dx = _apply_axis(dy, _upmat(D2 // 2).T, 2)
    dx = _apply_axis(dx, _upmat(H2 // 2).T, 3)
    dx = _apply_axis(dx, _upmat(W2 // 2).T, 4)
    return np.ascontiguousarray(dx)
