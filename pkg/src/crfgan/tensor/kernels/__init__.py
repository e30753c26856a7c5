"""Convolution kernel dispatch.

The compiled extension is preferred when importable; the numpy fallback is
selected otherwise. ``CRFGAN_KERNELS=numpy`` or ``=compiled`` forces a
backend. Padding, output-shape arithmetic, validation, and scratch-byte
accounting are shared here so both backends see identical contracts.
"""

from __future__ import annotations

import os

import numpy as np

from ...errors import ShapeError
from ..memory import ACCOUNTANT
from . import numpy_backend

_forced = os.environ.get("CRFGAN_KERNELS", "").strip().lower()

if _forced == "numpy":
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import _convkern as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        _impl = numpy_backend
        BACKEND = "numpy"


def backend_name() -> str:
    return BACKEND


def _triple(v) -> tuple:
    if isinstance(v, int):
        return (v, v, v)
    t = tuple(int(x) for x in v)
    if len(t) != 3:
        raise ShapeError(f"expected int or 3-tuple, got {v!r}")
    return t


def conv_out_size(size: int, k: int, s: int, p: int) -> int:
    return (size + 2 * p - k) // s + 1


def _check_conv_args(x_shape, w_shape, stride, pad):
    if len(x_shape) != 5 or len(w_shape) != 5:
        raise ShapeError(f"conv3d expects 5-d input and weight, got input {x_shape} weight {w_shape}")
    if x_shape[1] != w_shape[1]:
        raise ShapeError(f"channel mismatch: input {x_shape} vs weight {w_shape}")
    for i in range(3):
        if stride[i] < 1:
            raise ShapeError(f"stride must be >= 1, got {stride}")
        if x_shape[2 + i] + 2 * pad[i] < w_shape[2 + i]:
            raise ShapeError(
                f"padded spatial dim {x_shape[2 + i] + 2 * pad[i]} smaller than "
                f"kernel: input {x_shape} vs weight {w_shape}")


def _pad_input(x: np.ndarray, pad) -> np.ndarray:
    pd, ph, pw = pad
    if pd == ph == pw == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pd, pd), (ph, ph), (pw, pw)))


def conv3d_forward(x: np.ndarray, w: np.ndarray, stride, pad) -> np.ndarray:
    stride, pad = _triple(stride), _triple(pad)
    _check_conv_args(x.shape, w.shape, stride, pad)
    out_spatial = tuple(conv_out_size(x.shape[2 + i], w.shape[2 + i], stride[i], pad[i])
                        for i in range(3))
    xp = _pad_input(np.ascontiguousarray(x), pad)
    with ACCOUNTANT.scratch(xp.nbytes if xp is not x else 0):
        return _impl.conv3d_forward(xp, np.ascontiguousarray(w), stride, out_spatial)


def conv3d_grad_input(gy: np.ndarray, w: np.ndarray, stride, pad, in_spatial) -> np.ndarray:
    stride, pad = _triple(stride), _triple(pad)
    padded = tuple(in_spatial[i] + 2 * pad[i] for i in range(3))
    gxp = None
    with ACCOUNTANT.scratch(gy.shape[0] * w.shape[1] * int(np.prod(padded)) * gy.itemsize
                            if pad != (0, 0, 0) else 0):
        gxp = _impl.conv3d_grad_input(np.ascontiguousarray(gy), np.ascontiguousarray(w),
                                      stride, padded)
        pd, ph, pw = pad
        if pad == (0, 0, 0):
            return gxp
        return gxp[:, :, pd:pd + in_spatial[0], ph:ph + in_spatial[1],
                   pw:pw + in_spatial[2]].copy()


def conv3d_grad_weight(x: np.ndarray, gy: np.ndarray, stride, pad, kshape) -> np.ndarray:
    stride, pad = _triple(stride), _triple(pad)
    xp = _pad_input(np.ascontiguousarray(x), pad)
    with ACCOUNTANT.scratch(xp.nbytes if xp is not x else 0):
        return _impl.conv3d_grad_weight(xp, np.ascontiguousarray(gy), stride, tuple(kshape))


def conv_transpose3d_forward(x: np.ndarray, w: np.ndarray, stride, pad) -> np.ndarray:
    """Adjoint of conv3d: forward pass is conv3d's input gradient."""
    stride, pad = _triple(stride), _triple(pad)
    if len(x.shape) != 5 or len(w.shape) != 5:
        raise ShapeError(f"conv_transpose3d expects 5-d input and weight, got input {x.shape} weight {w.shape}")
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"channel mismatch: input {x.shape} vs weight {w.shape}")
    out_spatial = tuple((x.shape[2 + i] - 1) * stride[i] - 2 * pad[i] + w.shape[2 + i]
                        for i in range(3))
    for i, s in enumerate(out_spatial):
        if s < 1:
            raise ShapeError(f"conv_transpose3d output dim {i} would be {s} "
                             f"for input {x.shape} weight {w.shape}")
    return conv3d_grad_input(x, w, stride, pad, out_spatial)
