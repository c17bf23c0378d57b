# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for 3D convolution and trilinear x2 upsampling.

Semantics mirror `kernels_numpy` exactly (same clamping and tap order);
only the summation order differs, so results agree to float64 roundoff.
Single-threaded on purpose: deterministic reductions.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def conv3d_forward(double[:, :, :, :, ::1] xp,
                   double[:, :, :, :, ::1] w,
                   Py_ssize_t sd, Py_ssize_t sh, Py_ssize_t sw):
    cdef Py_ssize_t N = xp.shape[0], C = xp.shape[1]
    cdef Py_ssize_t Dp = xp.shape[2], Hp = xp.shape[3], Wp = xp.shape[4]
    cdef Py_ssize_t O = w.shape[0], kd = w.shape[2], kh = w.shape[3], kw = w.shape[4]
    cdef Py_ssize_t od = (Dp - kd) // sd + 1
    cdef Py_ssize_t oh = (Hp - kh) // sh + 1
    cdef Py_ssize_t ow = (Wp - kw) // sw + 1
    out_np = np.zeros((N, O, od, oh, ow), dtype=np.float64)
    cdef double[:, :, :, :, ::1] out = out_np
    cdef Py_ssize_t n, o, i, j, l, c, a, b, e, di, hj, wl
    cdef double acc
    with nogil:
        for n in range(N):
            for o in range(O):
                for i in range(od):
                    for j in range(oh):
                        for l in range(ow):
                            acc = 0.0
                            for c in range(C):
                                for a in range(kd):
                                    di = i * sd + a
                                    for b in range(kh):
                                        hj = j * sh + b
                                        for e in range(kw):
                                            wl = l * sw + e
                                            acc += xp[n, c, di, hj, wl] * w[o, c, a, b, e]
                            out[n, o, i, j, l] = acc
    return out_np


def conv3d_backward_kernel(double[:, :, :, :, ::1] xp,
                           double[:, :, :, :, ::1] dout,
                           Py_ssize_t kd, Py_ssize_t kh, Py_ssize_t kw,
                           Py_ssize_t sd, Py_ssize_t sh, Py_ssize_t sw):
    cdef Py_ssize_t N = xp.shape[0], C = xp.shape[1]
    cdef Py_ssize_t O = dout.shape[1]
    cdef Py_ssize_t od = dout.shape[2], oh = dout.shape[3], ow = dout.shape[4]
    dw_np = np.zeros((O, C, kd, kh, kw), dtype=np.float64)
    cdef double[:, :, :, :, ::1] dw = dw_np
    cdef Py_ssize_t n, o, i, j, l, c, a, b, e
    cdef double g
    with nogil:
        for n in range(N):
            for o in range(O):
                for i in range(od):
                    for j in range(oh):
                        for l in range(ow):
                            g = dout[n, o, i, j, l]
                            if g == 0.0:
                                continue
                            for c in range(C):
                                for a in range(kd):
                                    for b in range(kh):
                                        for e in range(kw):
                                            dw[o, c, a, b, e] += g * xp[n, c, i * sd + a, j * sh + b, l * sw + e]
    return dw_np


def conv3d_backward_input(double[:, :, :, :, ::1] dout,
                          double[:, :, :, :, ::1] w,
                          Py_ssize_t Dp, Py_ssize_t Hp, Py_ssize_t Wp,
                          Py_ssize_t sd, Py_ssize_t sh, Py_ssize_t sw):
    cdef Py_ssize_t N = dout.shape[0], O = dout.shape[1]
    cdef Py_ssize_t od = dout.shape[2], oh = dout.shape[3], ow = dout.shape[4]
    cdef Py_ssize_t C = w.shape[1], kd = w.shape[2], kh = w.shape[3], kw = w.shape[4]
    dxp_np = np.zeros((N, C, Dp, Hp, Wp), dtype=np.float64)
    cdef double[:, :, :, :, ::1] dxp = dxp_np
    cdef Py_ssize_t n, o, i, j, l, c, a, b, e
    cdef double g
    with nogil:
        for n in range(N):
            for o in range(O):
                for i in range(od):
                    for j in range(oh):
                        for l in range(ow):
                            g = dout[n, o, i, j, l]
                            if g == 0.0:
                                continue
                            for c in range(C):
                                for a in range(kd):
                                    for b in range(kh):
                                        for e in range(kw):
                                            dxp[n, c, i * sd + a, j * sh + b, l * sw + e] += g * w[o, c, a, b, e]
    return dxp_np


cdef void _axis_taps(Py_ssize_t n, Py_ssize_t[::1] lo, Py_ssize_t[::1] hi,
                     double[::1] f) nogil:
    # align_corners=False: src = (o + 0.5)/2 - 0.5, clamped to [0, n-1]
    cdef Py_ssize_t o, i0
    cdef double src
    for o in range(2 * n):
        src = (o + 0.5) / 2.0 - 0.5
        i0 = <Py_ssize_t>(src // 1.0) if src >= 0 else -1
        f[o] = src - i0
        lo[o] = i0 if i0 >= 0 else 0
        if i0 + 1 <= n - 1:
            hi[o] = i0 + 1 if i0 + 1 >= 0 else 0
        else:
            hi[o] = n - 1
        if lo[o] > n - 1:
            lo[o] = n - 1


def upsample2_forward(double[:, :, :, :, ::1] x):
    cdef Py_ssize_t N = x.shape[0], C = x.shape[1]
    cdef Py_ssize_t D = x.shape[2], H = x.shape[3], W = x.shape[4]
    y_np = np.zeros((N, C, 2 * D, 2 * H, 2 * W), dtype=np.float64)
    cdef double[:, :, :, :, ::1] y = y_np
    lo_d_np = np.zeros(2 * D, dtype=np.intp); hi_d_np = np.zeros(2 * D, dtype=np.intp)
    lo_h_np = np.zeros(2 * H, dtype=np.intp); hi_h_np = np.zeros(2 * H, dtype=np.intp)
    lo_w_np = np.zeros(2 * W, dtype=np.intp); hi_w_np = np.zeros(2 * W, dtype=np.intp)
    fd_np = np.zeros(2 * D); fh_np = np.zeros(2 * H); fw_np = np.zeros(2 * W)
    cdef Py_ssize_t[::1] lo_d = lo_d_np, hi_d = hi_d_np
    cdef Py_ssize_t[::1] lo_h = lo_h_np, hi_h = hi_h_np
    cdef Py_ssize_t[::1] lo_w = lo_w_np, hi_w = hi_w_np
    cdef double[::1] fd = fd_np, fh = fh_np, fw = fw_np
    cdef Py_ssize_t n, c, i, j, l
    cdef double wd0, wd1, wh0, wh1, ww0, ww1
    with nogil:
        _axis_taps(D, lo_d, hi_d, fd)
        _axis_taps(H, lo_h, hi_h, fh)
        _axis_taps(W, lo_w, hi_w, fw)
        for n in range(N):
            for c in range(C):
                for i in range(2 * D):
                    wd1 = fd[i]; wd0 = 1.0 - wd1
                    for j in range(2 * H):
                        wh1 = fh[j]; wh0 = 1.0 - wh1
                        for l in range(2 * W):
                            ww1 = fw[l]; ww0 = 1.0 - ww1
                            y[n, c, i, j, l] = (
                                wd0 * (wh0 * (ww0 * x[n, c, lo_d[i], lo_h[j], lo_w[l]]
                                              + ww1 * x[n, c, lo_d[i], lo_h[j], hi_w[l]])
                                       + wh1 * (ww0 * x[n, c, lo_d[i], hi_h[j], lo_w[l]]
                                                + ww1 * x[n, c, lo_d[i], hi_h[j], hi_w[l]]))
                                + wd1 * (wh0 * (ww0 * x[n, c, hi_d[i], lo_h[j], lo_w[l]]
                                                + ww1 * x[n, c, hi_d[i], lo_h[j], hi_w[l]])
                                         + wh1 * (ww0 * x[n, c, hi_d[i], hi_h[j], lo_w[l]]
                                                  + ww1 * x[n, c, hi_d[i], hi_h[j], hi_w[l]])))
    return y_np


def upsample2_backward(double[:, :, :, :, ::1] dy):
    cdef Py_ssize_t N = dy.shape[0], C = dy.shape[1]
    cdef Py_ssize_t D = dy.shape[2] // 2, H = dy.shape[3] // 2, W = dy.shape[4] // 2
    dx_np = np.zeros((N, C, D, H, W), dtype=np.float64)
    cdef double[:, :, :, :, ::1] dx = dx_np
    lo_d_np = np.zeros(2 * D, dtype=np.intp); hi_d_np = np.zeros(2 * D, dtype=np.intp)
    lo_h_np = np.zeros(2 * H, dtype=np.intp); hi_h_np = np.zeros(2 * H, dtype=np.intp)
    lo_w_np = np.zeros(2 * W, dtype=np.intp); hi_w_np = np.zeros(2 * W, dtype=np.intp)
    fd_np = np.zeros(2 * D); fh_np = np.zeros(2 * H); fw_np = np.zeros(2 * W)
    cdef Py_ssize_t[::1] lo_d = lo_d_np, hi_d = hi_d_np
    cdef Py_ssize_t[::1] lo_h = lo_h_np, hi_h = hi_h_np
    cdef Py_ssize_t[::1] lo_w = lo_w_np, hi_w = hi_w_np
    cdef double[::1] fd = fd_np, fh = fh_np, fw = fw_np
    cdef Py_ssize_t n, c, i, j, l
    cdef double g, wd0, wd1, wh0, wh1, ww0, ww1
    with nogil:
        _axis_taps(D, lo_d, hi_d, fd)
        _axis_taps(H, lo_h, hi_h, fh)
        _axis_taps(W, lo_w, hi_w, fw)
        for n in range(N):
            for c in range(C):
                for i in range(2 * D):
                    wd1 = fd[i]; wd0 = 1.0 - wd1
                    for j in range(2 * H):
                        wh1 = fh[j]; wh0 = 1.0 - wh1
                        for l in range(2 * W):
                            ww1 = fw[l]; ww0 = 1.0 - ww1
                            g = dy[n, c, i, j, l]
                            if g == 0.0:
                                continue
                            dx[n, c, lo_d[i], lo_h[j], lo_w[l]] += g * wd0 * wh0 * ww0
                            dx[n, c, lo_d[i], lo_h[j], hi_w[l]] += g * wd0 * wh0 * ww1
                            dx[n, c, lo_d[i], hi_h[j], lo_w[l]] += g * wd0 * wh1 * ww0
                            dx[n, c, lo_d[i], hi_h[j], hi_w[l]] += g * wd0 * wh1 * ww1
                            dx[n, c, hi_d[i], lo_h[j], lo_w[l]] += g * wd1 * wh0 * ww0
                            dx[n, c, hi_d[i], lo_h[j], hi_w[l]] += g * wd1 * wh0 * ww1
                            dx[n, c, hi_d[i], hi_h[j], lo_w[l]] += g * wd1 * wh1 * ww0
                            dx[n, c, hi_d[i], hi_h[j], hi_w[l]] += g * wd1 * wh1 * ww1
    return dx_np
