"""Pure-numpy convolution primitives (shift-and-accumulate over kernel taps).

All three routines operate on pre-padded inputs; padding, shape checks and
scratch accounting live in the dispatcher. No im2col buffer is ever built:
the largest temporary is one tap-compacted view the size of the output.
"""

from __future__ import annotations

import numpy as np


def conv3d_forward(xp: np.ndarray, w: np.ndarray, stride, out_spatial) -> np.ndarray:
    N, C = xp.shape[:2]
    F = w.shape[0]
    kd, kh, kw = w.shape[2:]
    sd, sh, sw = stride
    Do, Ho, Wo = out_spatial
    out = np.zeros((N, F, Do, Ho, Wo), dtype=xp.dtype)
    for a in range(kd):
        for b in range(kh):
            for c in range(kw):
                xv = xp[:, :,
                        a:a + (Do - 1) * sd + 1:sd,
                        b:b + (Ho - 1) * sh + 1:sh,
                        c:c + (Wo - 1) * sw + 1:sw]
                out += np.einsum("ncdhw,fc->nfdhw", xv, w[:, :, a, b, c],
                                 optimize=True)
    return out


def conv3d_grad_input(gy: np.ndarray, w: np.ndarray, stride, padded_spatial) -> np.ndarray:
    N, F = gy.shape[:2]
    C = w.shape[1]
    kd, kh, kw = w.shape[2:]
    sd, sh, sw = stride
    Do, Ho, Wo = gy.shape[2:]
    gxp = np.zeros((N, C) + tuple(padded_spatial), dtype=gy.dtype)
    for a in range(kd):
        for b in range(kh):
            for c in range(kw):
                contrib = np.einsum("nfdhw,fc->ncdhw", gy, w[:, :, a, b, c],
                                    optimize=True)
                gxp[:, :,
                    a:a + (Do - 1) * sd + 1:sd,
                    b:b + (Ho - 1) * sh + 1:sh,
                    c:c + (Wo - 1) * sw + 1:sw] += contrib
    return gxp


def conv3d_grad_weight(xp: np.ndarray, gy: np.ndarray, stride, kshape) -> np.ndarray:
    N, C = xp.shape[:2]
    F = gy.shape[1]
    kd, kh, kw = kshape
    sd, sh, sw = stride
    Do, Ho, Wo = gy.shape[2:]
    gw = np.zeros((F, C, kd, kh, kw), dtype=xp.dtype)
    for a in range(kd):
        for b in range(kh):
            for c in range(kw):
                xv = xp[:, :,
                        a:a + (Do - 1) * sd + 1:sd,
                        b:b + (Ho - 1) * sh + 1:sh,
                        c:c + (Wo - 1) * sw + 1:sw]
                gw[:, :, a, b, c] = np.einsum("ncdhw,nfdhw->fc", xv, gy,
                                              optimize=True)
    return gw
