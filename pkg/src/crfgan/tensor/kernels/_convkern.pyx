# cython: boundscheck=False, wraparound=False, cdivision=True
# Direct-loop 3D convolution kernels on pre-padded, C-contiguous arrays.
# Loops are ordered so one output row stays hot while kernel taps stream
# over contiguous input rows; the inner ow loop vectorizes under -O3.

import numpy as np

cimport cython
cimport numpy as cnp

ctypedef fused floating:
    float
    double


def conv3d_forward(floating[:, :, :, :, ::1] xp, floating[:, :, :, :, ::1] w,
                   stride, out_spatial):
    cdef Py_ssize_t N = xp.shape[0], C = xp.shape[1]
    cdef Py_ssize_t F = w.shape[0]
    cdef Py_ssize_t kd = w.shape[2], kh = w.shape[3], kw = w.shape[4]
    cdef Py_ssize_t sd = stride[0], sh = stride[1], sw = stride[2]
    cdef Py_ssize_t Do = out_spatial[0], Ho = out_spatial[1], Wo = out_spatial[2]

    if floating is float:
        out_np = np.zeros((N, F, Do, Ho, Wo), dtype=np.float32)
    else:
        out_np = np.zeros((N, F, Do, Ho, Wo), dtype=np.float64)
    cdef floating[:, :, :, :, ::1] out = out_np

    cdef Py_ssize_t n, f, c, a, b, e, od, oh, ow, iD, iH
    cdef floating wv
    with nogil:
        for n in range(N):
            for od in range(Do):
                for oh in range(Ho):
                    for f in range(F):
                        for c in range(C):
                            for a in range(kd):
                                iD = od * sd + a
                                for b in range(kh):
                                    iH = oh * sh + b
                                    for e in range(kw):
                                        wv = w[f, c, a, b, e]
                                        for ow in range(Wo):
                                            out[n, f, od, oh, ow] += wv * xp[n, c, iD, iH, ow * sw + e]
    return out_np


def conv3d_grad_input(floating[:, :, :, :, ::1] gy, floating[:, :, :, :, ::1] w,
                      stride, padded_spatial):
    cdef Py_ssize_t N = gy.shape[0], F = gy.shape[1]
    cdef Py_ssize_t C = w.shape[1]
    cdef Py_ssize_t kd = w.shape[2], kh = w.shape[3], kw = w.shape[4]
    cdef Py_ssize_t sd = stride[0], sh = stride[1], sw = stride[2]
    cdef Py_ssize_t Dp = padded_spatial[0], Hp = padded_spatial[1], Wp = padded_spatial[2]
    cdef Py_ssize_t Do = gy.shape[2], Ho = gy.shape[3], Wo = gy.shape[4]

    if floating is float:
        gxp_np = np.zeros((N, C, Dp, Hp, Wp), dtype=np.float32)
    else:
        gxp_np = np.zeros((N, C, Dp, Hp, Wp), dtype=np.float64)
    cdef floating[:, :, :, :, ::1] gxp = gxp_np

    cdef Py_ssize_t n, f, c, a, b, e, od, oh, ow, iD, iH
    cdef floating wv
    with nogil:
        for n in range(N):
            for od in range(Do):
                for oh in range(Ho):
                    for c in range(C):
                        for f in range(F):
                            for a in range(kd):
                                iD = od * sd + a
                                for b in range(kh):
                                    iH = oh * sh + b
                                    for e in range(kw):
                                        wv = w[f, c, a, b, e]
                                        for ow in range(Wo):
                                            gxp[n, c, iD, iH, ow * sw + e] += wv * gy[n, f, od, oh, ow]
    return gxp_np


def conv3d_grad_weight(floating[:, :, :, :, ::1] xp, floating[:, :, :, :, ::1] gy,
                       stride, kshape):
    cdef Py_ssize_t N = xp.shape[0], C = xp.shape[1]
    cdef Py_ssize_t F = gy.shape[1]
    cdef Py_ssize_t kd = kshape[0], kh = kshape[1], kw = kshape[2]
    cdef Py_ssize_t sd = stride[0], sh = stride[1], sw = stride[2]
    cdef Py_ssize_t Do = gy.shape[2], Ho = gy.shape[3], Wo = gy.shape[4]

    if floating is float:
        gw_np = np.zeros((F, C, kd, kh, kw), dtype=np.float32)
    else:
        gw_np = np.zeros((F, C, kd, kh, kw), dtype=np.float64)
    cdef floating[:, :, :, :, ::1] gw = gw_np

    cdef Py_ssize_t n, f, c, a, b, e, od, oh, ow, iD, iH
    cdef floating acc
    with nogil:
        for n in range(N):
            for od in range(Do):
                for oh in range(Ho):
                    for f in range(F):
                        for c in range(C):
                            for a in range(kd):
                                iD = od * sd + a
                                for b in range(kh):
                                    iH = oh * sh + b
                                    for e in range(kw):
                                        acc = 0
                                        for ow in range(Wo):
                                            acc += gy[n, f, od, oh, ow] * xp[n, c, iD, iH, ow * sw + e]
                                        gw[f, c, a, b, e] += acc
    return gw_np
