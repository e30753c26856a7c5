"""Differentiable operations over :class:`~crfgan.tensor.core.Tensor`.

Every op builds its output through ``make_op`` so the tape, the NaN guard,
and the byte accountant all see it. Backward closures capture the numpy
buffers they need; they run before ``free_graph`` ever releases them.

A backward function may hand the same gradient array to at most one parent
(``Tensor.backward`` copies duplicates defensively, but ops written here
keep the contract explicit).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError, DegenerateBatchError, DomainError, ShapeError
from . import kernels
from .core import Tensor, as_tensor, make_op


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape``: the adjoint of numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _same_dtype(*ts: Tensor) -> None:
    # mixed precision is always a bug here, never a convenience
    dt = ts[0].dtype
    for t in ts[1:]:
        if t.dtype != dt:
            raise ShapeError(f"dtype mismatch: {dt} vs {t.dtype}")


def _pair(a, b) -> tuple:
    """Coerce a (tensor, array-like) pair to tensors of one dtype."""
    if isinstance(a, Tensor):
        return a, (b if isinstance(b, Tensor) else Tensor(np.asarray(b, dtype=a.dtype)))
    if isinstance(b, Tensor):
        return Tensor(np.asarray(a, dtype=b.dtype)), b
    return as_tensor(a), as_tensor(b)


def _needs_grad(t: Tensor) -> bool:
    """True when backward must produce a gradient for this tensor."""
    return t.requires_grad or t._ctx is not None


# -- arithmetic ---------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    _same_dtype(a, b)
    out = a.data + b.data

    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return make_op("add", out, (a, b), bwd)


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    _same_dtype(a, b)
    out = a.data - b.data

    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return make_op("sub", out, (a, b), bwd)


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    _same_dtype(a, b)
    ad, bd = a.data, b.data
    out = ad * bd

    def bwd(g):
        return _unbroadcast(g * bd, a.shape), _unbroadcast(g * ad, b.shape)

    return make_op("mul", out, (a, b), bwd)


def div(a, b) -> Tensor:
    a, b = _pair(a, b)
    _same_dtype(a, b)
    ad, bd = a.data, b.data
    with np.errstate(divide="ignore", invalid="ignore"):
        out = ad / bd

    def bwd(g):
        ga = g / bd
        return _unbroadcast(ga, a.shape), _unbroadcast(-ga * ad / bd, b.shape)

    return make_op("div", out, (a, b), bwd)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return make_op("neg", -a.data, (a,), lambda g: (-g,))


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return make_op("scale", a.data * c, (a,), lambda g: (g * c,))


def add_scalar(a, c: float) -> Tensor:
    a = as_tensor(a)
    return make_op("add_scalar", a.data + float(c), (a,), lambda g: (g,))


def square(a) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    return make_op("square", ad * ad, (a,), lambda g: (2.0 * ad * g,))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data < 0):
        raise DomainError("sqrt of negative value")
    out = np.sqrt(a.data)

    def bwd(g):
        return (g * (0.5 / np.maximum(out, np.finfo(out.dtype).tiny)),)

    return make_op("sqrt", out, (a,), bwd)


def absolute(a) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    return make_op("abs", np.abs(ad), (a,), lambda g: (g * np.sign(ad),))


# -- shape --------------------------------------------------------------------

def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    shape = tuple(shape)
    in_shape = a.shape
    out = a.data.reshape(shape)
    return make_op("reshape", out, (a,), lambda g: (g.reshape(in_shape),),
                   check_finite=False)


def slice_axis(a, axis: int, start: int, stop: int) -> Tensor:
    """Contiguous slice ``a[..., start:stop, ...]`` along one axis."""
    a = as_tensor(a)
    n = a.shape[axis]
    if not (0 <= start < stop <= n):
        raise ShapeError(f"slice [{start}:{stop}] out of range for axis {axis} "
                         f"of shape {a.shape}")
    idx = [slice(None)] * len(a.shape)
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    out = np.ascontiguousarray(a.data[idx])
    in_shape, dtype = a.shape, a.dtype

    def bwd(g):
        gx = np.zeros(in_shape, dtype=dtype)
        gx[idx] = g
        return (gx,)

    return make_op("slice_axis", out, (a,), bwd, check_finite=False)


def _norm_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(axis, len(a.shape))
    out = a.data.sum(axis=axes, keepdims=keepdims)
    in_shape = a.shape
    kshape = tuple(1 if i in axes else s for i, s in enumerate(in_shape))

    def bwd(g):
        return (np.broadcast_to(g.reshape(kshape), in_shape),)

    return make_op("sum", np.asarray(out), (a,), bwd)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(axis, len(a.shape))
    count = 1
    for ax in axes:
        count *= a.shape[ax]
    out = a.data.mean(axis=axes, keepdims=keepdims)
    in_shape = a.shape
    kshape = tuple(1 if i in axes else s for i, s in enumerate(in_shape))
    inv = 1.0 / count

    def bwd(g):
        return (np.broadcast_to(g.reshape(kshape) * inv, in_shape),)

    return make_op("mean", np.asarray(out), (a,), bwd)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_dtype(a, b)
    if len(a.shape) != 2 or len(b.shape) != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul needs [n,k] @ [k,m], got {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data
    out = ad @ bd

    def bwd(g):
        return g @ bd.T, ad.T @ g

    return make_op("matmul", out, (a, b), bwd)


def linear(x, w, b: Optional[Tensor] = None) -> Tensor:
    """x[n,k] @ w[k,m] (+ b[m])."""
    y = matmul(x, w)
    return add(y, b) if b is not None else y


# -- activations --------------------------------------------------------------

def relu(a) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    return make_op("relu", np.maximum(ad, 0), (a,), lambda g: (g * (ad > 0),))


def leaky_relu(a, alpha: float = 0.2) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    out = np.where(ad > 0, ad, alpha * ad)

    def bwd(g):
        return (g * np.where(ad > 0, 1.0, alpha).astype(ad.dtype),)

    return make_op("leaky_relu", out, (a,), bwd)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return make_op("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)),
                        np.exp(np.minimum(x, 0)) / (1.0 + np.exp(np.minimum(x, 0))))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = _sigmoid(a.data)
    return make_op("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def softplus(a) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    out = np.logaddexp(0.0, ad).astype(ad.dtype)
    return make_op("softplus", out, (a,), lambda g: (g * _sigmoid(ad),))


# -- convolution --------------------------------------------------------------

def conv3d(x, w, b=None, stride=1, padding=0) -> Tensor:
    """Cross-correlation of x[N,C,D,H,W] with w[F,C,kd,kh,kw]."""
    x, w = as_tensor(x), as_tensor(w)
    _same_dtype(x, w)
    out = kernels.conv3d_forward(x.data, w.data, stride, padding)
    xd, wd = x.data, w.data
    in_spatial, kshape = x.shape[2:], w.shape[2:]

    def bwd(g):
        gx = (kernels.conv3d_grad_input(g, wd, stride, padding, in_spatial)
              if _needs_grad(x) else None)
        gw = (kernels.conv3d_grad_weight(xd, g, stride, padding, kshape)
              if _needs_grad(w) else None)
        return gx, gw

    y = make_op("conv3d", out, (x, w), bwd)
    if b is not None:
        b = as_tensor(b)
        y = add(y, reshape(b, (1, b.shape[0], 1, 1, 1)))
    return y


def conv_transpose3d(x, w, b=None, stride=1, padding=0) -> Tensor:
    """Adjoint of conv3d; weight layout w[Cin,Cout,kd,kh,kw]."""
    x, w = as_tensor(x), as_tensor(w)
    _same_dtype(x, w)
    out = kernels.conv_transpose3d_forward(x.data, w.data, stride, padding)
    xd, wd = x.data, w.data
    kshape = w.shape[2:]

    def bwd(g):
        gx = (kernels.conv3d_forward(g, wd, stride, padding)
              if _needs_grad(x) else None)
        gw = (kernels.conv3d_grad_weight(g, xd, stride, padding, kshape)
              if _needs_grad(w) else None)
        return gx, gw

    y = make_op("conv_transpose3d", out, (x, w), bwd)
    if b is not None:
        b = as_tensor(b)
        y = add(y, reshape(b, (1, b.shape[0], 1, 1, 1)))
    return y


# -- normalization ------------------------------------------------------------

def batch_norm3d(x, gamma, beta, running_mean: np.ndarray,
                 running_var: np.ndarray, training: bool,
                 momentum: float = 0.1, eps: float = 1e-5) -> Tensor:
    """Per-channel normalization over (batch, spatial) axes.

    ``running_mean``/``running_var`` are plain arrays mutated in place in
    training mode (biased variance normalizes, unbiased updates the stats).
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    _same_dtype(x, gamma, beta)
    if len(x.shape) != 5:
        raise ShapeError(f"batch_norm3d expects [N,C,D,H,W], got {x.shape}")
    C = x.shape[1]
    axes = (0, 2, 3, 4)
    xd = x.data
    gshape = (1, C, 1, 1, 1)

    if training:
        count = xd.size // C
        if count < 2:
            raise DegenerateBatchError(
                f"batch norm over {count} element(s) per channel in training mode")
        mu = xd.mean(axis=axes)
        xc = xd - mu.reshape(gshape)
        var = np.mean(xc * xc, axis=axes)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        running_var *= 1.0 - momentum
        running_var += momentum * var * (count / (count - 1))
    else:
        mu = running_mean.astype(xd.dtype)
        var = running_var.astype(xd.dtype)
        xc = xd - mu.reshape(gshape)
        count = 0

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv_std.reshape(gshape)
    out = gamma.data.reshape(gshape) * xhat + beta.data.reshape(gshape)
    gd = gamma.data

    def bwd(g):
        gbeta = g.sum(axis=axes)
        ggamma = (g * xhat).sum(axis=axes)
        gxhat = g * gd.reshape(gshape)
        if training:
            # backward through the batch statistics themselves
            s1 = gxhat.sum(axis=axes).reshape(gshape)
            s2 = (gxhat * xhat).sum(axis=axes).reshape(gshape)
            gx = (gxhat - s1 / count - xhat * s2 / count) * inv_std.reshape(gshape)
        else:
            gx = gxhat * inv_std.reshape(gshape)
        return gx, ggamma, gbeta

    return make_op("batch_norm3d", out, (x, gamma, beta), bwd)


def group_norm(x, num_groups: int, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Per-(sample, group) normalization over the grouped channel+spatial axes."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    _same_dtype(x, gamma, beta)
    if len(x.shape) != 5:
        raise ShapeError(f"group_norm expects [N,C,D,H,W], got {x.shape}")
    N, C = x.shape[:2]
    if C % num_groups != 0:
        raise ConfigError(f"{C} channels not divisible by {num_groups} groups")
    spatial = x.shape[2:]
    xd = x.data
    xg = xd.reshape(N, num_groups, -1)
    mu = xg.mean(axis=2, keepdims=True)
    xc = xg - mu
    var = np.mean(xc * xc, axis=2, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (xc * inv_std).reshape(xd.shape)
    gshape = (1, C, 1, 1, 1)
    out = gamma.data.reshape(gshape) * xhat + beta.data.reshape(gshape)
    gd = gamma.data
    count = xg.shape[2]

    def bwd(g):
        gbeta = g.sum(axis=(0, 2, 3, 4))
        ggamma = (g * xhat).sum(axis=(0, 2, 3, 4))
        gxhat = (g * gd.reshape(gshape)).reshape(N, num_groups, -1)
        xhat_g = xhat.reshape(N, num_groups, -1)
        s1 = gxhat.sum(axis=2, keepdims=True)
        s2 = (gxhat * xhat_g).sum(axis=2, keepdims=True)
        gx = (gxhat - s1 / count - xhat_g * s2 / count) * inv_std
        return gx.reshape((N, C) + spatial), ggamma, gbeta

    return make_op("group_norm", out, (x, gamma, beta), bwd)


# -- spectral normalization ----------------------------------------------------

@dataclass
class SpectralState:
    """Persistent left/right power-iteration vectors for one weight."""
    u: np.ndarray
    v: np.ndarray

    @staticmethod
    def init(out_dim: int, fan_in: int, rng: np.random.Generator,
             dtype=np.float32) -> "SpectralState":
        u = rng.standard_normal(out_dim).astype(dtype)
        u /= max(np.linalg.norm(u), 1e-12)
        v = rng.standard_normal(fan_in).astype(dtype)
        v /= max(np.linalg.norm(v), 1e-12)
        return SpectralState(u=u, v=v)


def spectral_normalize(w, state: SpectralState, power_iters: int = 1,
                       eps: float = 1e-12) -> Tensor:
    """Divide ``w`` by its power-iteration largest-singular-value estimate.

    ``power_iters=0`` reuses the stored vectors without refreshing them,
    which makes the op an explicit smooth function of ``w`` (the gradient
    treats u and v as constants, so finite-difference checks are exact in
    that mode). A zero weight matrix is returned unchanged with the
    estimate clamped to ``eps``.
    """
    w = as_tensor(w)
    wd = w.data
    w2 = wd.reshape(wd.shape[0], -1)
    u, v = state.u, state.v
    for _ in range(power_iters):
        v = w2.T @ u
        nv = np.linalg.norm(v)
        if nv < eps:
            break
        v = v / nv
        u = w2 @ v
        nu = np.linalg.norm(u)
        if nu < eps:
            break
        u = u / nu
    state.u, state.v = u, v
    sigma = float(u @ w2 @ v)
    if sigma < eps:
        # degenerate (zero) weight: pass through unchanged
        return make_op("spectral_normalize", wd.copy(), (w,), lambda g: (g,))
    inv = 1.0 / sigma
    out = wd * inv
    uc, vc = u.copy(), v.copy()
    wshape = wd.shape

    def bwd(g):
        inner = float(np.vdot(g, wd))
        gw = g * inv - (inner * inv * inv) * np.outer(uc, vc).reshape(wshape).astype(g.dtype)
        return (gw,)

    return make_op("spectral_normalize", out, (w,), bwd)


# -- losses -------------------------------------------------------------------

def l1_loss(a, b) -> Tensor:
    """Mean absolute difference, a scalar."""
    a, b = as_tensor(a), as_tensor(b)
    _same_dtype(a, b)
    if a.shape != b.shape:
        raise ShapeError(f"l1_loss shape mismatch: {a.shape} vs {b.shape}")
    d = a.data - b.data
    out = np.asarray(np.mean(np.abs(d)))
    sgn = np.sign(d) / d.size

    def bwd(g):
        ga = g * sgn
        return ga, -ga

    return make_op("l1_loss", out, (a, b), bwd)


def _check_targets(t: np.ndarray) -> None:
    if np.any(t < 0) or np.any(t > 1):
        raise DomainError(f"targets outside [0,1]: range "
                          f"[{t.min():.3g}, {t.max():.3g}]")


def bce_with_logits(logits, targets) -> Tensor:
    """Mean binary cross-entropy from logits: softplus(x) - x*t, stable."""
    logits = as_tensor(logits)
    t = np.asarray(targets, dtype=logits.dtype) if not isinstance(targets, Tensor) else targets.data
    if t.shape != logits.shape:
        t = np.broadcast_to(t, logits.shape)
    _check_targets(t)
    xd = logits.data
    out = np.asarray(np.mean(np.logaddexp(0.0, xd) - xd * t))
    n = xd.size

    def bwd(g):
        return (g * (_sigmoid(xd) - t) / n,)

    return make_op("bce_with_logits", out, (logits,), bwd)


def bce(probs, targets) -> Tensor:
    """Mean binary cross-entropy on probabilities in (0,1)."""
    probs = as_tensor(probs)
    p = probs.data
    if np.any(p <= 0) or np.any(p >= 1):
        raise DomainError(f"probabilities outside (0,1): range "
                          f"[{p.min():.3g}, {p.max():.3g}]")
    t = np.asarray(targets, dtype=probs.dtype) if not isinstance(targets, Tensor) else targets.data
    if t.shape != p.shape:
        t = np.broadcast_to(t, p.shape)
    _check_targets(t)
    out = np.asarray(np.mean(-t * np.log(p) - (1.0 - t) * np.log1p(-p)))
    n = p.size

    def bwd(g):
        return (g * ((p - t) / (p * (1.0 - p))) / n,)

    return make_op("bce", out, (probs,), bwd)


# -- operator sugar ------------------------------------------------------------
# Attached here (not in core) so the tape stays independent of the math layer.
# Python scalars route through the cheap scalar ops instead of tensor wrapping.

def _add(self, other):
    return add_scalar(self, other) if isinstance(other, (int, float)) else add(self, other)


def _sub(self, other):
    return add_scalar(self, -other) if isinstance(other, (int, float)) else sub(self, other)


def _mul(self, other):
    return scale(self, other) if isinstance(other, (int, float)) else mul(self, other)


Tensor.__add__ = _add
Tensor.__radd__ = _add
Tensor.__sub__ = _sub
Tensor.__mul__ = _mul
Tensor.__rmul__ = _mul
Tensor.__neg__ = lambda self: neg(self)
Tensor.__truediv__ = lambda self, other: (
    scale(self, 1.0 / other) if isinstance(other, (int, float)) else div(self, other))
