"""Kernel backend selection: compiled extension if available, numpy otherwise.

Set RESROM_PURE_NUMPY=1 to force the fallback (used by the equivalence
tests and the kernel benchmark).
"""
from __future__ import annotations

import os

import numpy as np

from . import kernels_numpy

_FORCE_NUMPY = os.environ.get("RESROM_PURE_NUMPY", "").lower() in (
    "1",
    "true",
    "yes",
)

if not _FORCE_NUMPY:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = kernels_numpy
        BACKEND = "numpy"
else:
    _impl = kernels_numpy
    BACKEND = "numpy"


def _as64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _pad(x, pd, ph, pw):
    if pd == ph == pw == 0:
        return _as64(x)
    return np.pad(x, ((0, 0), (0, 0), (pd, pd), (ph, ph), (pw, pw)))


def conv3d_forward(x, w, stride, padding, impl=None):
    """Cross-correlate x (N,C,D,H,W) with w (O,C,kd,kh,kw)."""
    impl = impl or _impl
    sd, sh, sw = stride
    pd, ph, pw = padding
    xp = _pad(_as64(x), pd, ph, pw)
    return impl.conv3d_forward(xp, _as64(w), sd, sh, sw)


def conv3d_backward(x, w, dout, stride, padding, impl=None):
    """Gradients (dx, dw) of conv3d_forward."""
    impl = impl or _impl
    sd, sh, sw = stride
    pd, ph, pw = padding
    xp = _pad(_as64(x), pd, ph, pw)
    dout = _as64(dout)
    w = _as64(w)
    kd, kh, kw = w.shape[2:]
    dw = impl.conv3d_backward_kernel(xp, dout, kd, kh, kw, sd, sh, sw)
    dxp = impl.conv3d_backward_input(
        dout, w, xp.shape[2], xp.shape[3], xp.shape[4], sd, sh, sw
    )
    if pd or ph or pw:
        D, H, W = x.shape[2:]
        dxp = dxp[:, :, pd : pd + D, ph : ph + H, pw : pw + W]
    return np.ascontiguousarray(dxp), dw


def upsample2_forward(x, impl=None):
    impl = impl or _impl
    return impl.upsample2_forward(_as64(x))


def upsample2_backward(dy, impl=None):
    impl = impl or _impl
    return impl.upsample2_backward(_as64(dy))


def conv3d_output_shape(in_shape, k_shape, stride, padding):
    N, C, D, H, W = in_shape
    O, _, kd, kh, kw = k_shape
    sd, sh, sw = stride
    pd, ph, pw = padding
    od = (D + 2 * pd - kd) // sd + 1
    oh = (H + 2 * ph - kh) // sh + 1
    ow = (W + 2 * pw - kw) // sw + 1
    return (N, O, od, oh, ow)
