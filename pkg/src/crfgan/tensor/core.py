"""Reverse-mode autodiff on dense numpy buffers.

The graph is a plain tape: every op output keeps (parents, backward_fn).
Backward releases intermediate gradient buffers as soon as they are
consumed; ``free_graph`` releases intermediate activations after the
optimizer step, which is what makes the peak-byte accounting in
:mod:`crfgan.tensor.memory` meaningful.
"""

from __future__ import annotations

import weakref
from contextlib import contextmanager
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import NonFiniteError, ShapeError
from .memory import ACCOUNTANT

FLOAT_DTYPES = (np.float32, np.float64)

_grad_enabled = True
_nan_guard = True


@contextmanager
def no_grad():
    """Disable graph construction inside the block."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


@contextmanager
def nan_guard(enabled: bool):
    global _nan_guard
    prev = _nan_guard
    _nan_guard = enabled
    try:
        yield
    finally:
        _nan_guard = prev


class Tensor:
    """Dense n-d float array with optional gradient tracking."""

    __slots__ = ("_data", "grad", "requires_grad", "_ctx", "_token",
                 "_grad_token", "__weakref__")

    def __init__(self, data, dtype=None, requires_grad: bool = False):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in FLOAT_DTYPES:
            arr = arr.astype(np.float32 if dtype is None else dtype)
        arr = np.ascontiguousarray(arr)
        self._data: Optional[np.ndarray] = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self._ctx = None
        self._grad_token: Optional[int] = None
        self._token = ACCOUNTANT.register(arr.nbytes)
        weakref.finalize(self, ACCOUNTANT.release, self._token)

    # -- basic introspection -------------------------------------------------

    @property
    def data(self) -> np.ndarray:
        if self._data is None:
            raise RuntimeError("tensor buffer was freed by free_graph()")
        return self._data

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def nbytes(self) -> int:
        return self.data.nbytes

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape if self._data is not None else '<freed>'}, dtype={self._data.dtype if self._data is not None else '?'}, requires_grad={self.requires_grad})"

    def detach(self) -> "Tensor":
        """Graph-free alias of this tensor (shares the buffer)."""
        out = Tensor.__new__(Tensor)
        out._data = self._data
        out.grad = None
        out.requires_grad = False
        out._ctx = None
        out._grad_token = None
        out._token = -1  # buffer owned by the source tensor
        return out

    # -- autograd ------------------------------------------------------------

    def backward(self) -> None:
        """Backpropagate from a scalar output through the tape."""
        if self._data is None or self._data.size != 1:
            raise ShapeError(f"backward() needs a scalar output, got shape {self.shape}")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                for p in node._ctx[1]:
                    if p._ctx is not None or p.requires_grad:
                        stack.append((p, False))

        self._set_grad(np.ones_like(self._data))
        for node in reversed(topo):
            ctx = node._ctx
            if ctx is None or node.grad is None:
                continue
            _name, parents, bwd = ctx
            grads = bwd(node.grad)
            handed: set[int] = set()
            for parent, g in zip(parents, grads):
                if g is None:
                    continue
                if parent.requires_grad or parent._ctx is not None:
                    # an op handing one array to two parents would alias
                    # their accumulators; copy the second occurrence
                    if id(g) in handed:
                        g = g.copy()
                    handed.add(id(g))
                    parent._accum_grad(g)
            if node is not self:
                node._release_grad()

    def _set_grad(self, g: np.ndarray) -> None:
        self.grad = g
        self._grad_token = ACCOUNTANT.register(g.nbytes)

    def _accum_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self._set_grad(g.copy() if not g.flags.owndata else g)
        else:
            self.grad += g

    def _release_grad(self) -> None:
        if self._grad_token is not None:
            ACCOUNTANT.release(self._grad_token)
            self._grad_token = None
        self.grad = None

    def zero_grad(self) -> None:
        self._release_grad()

    def free_graph(self) -> None:
        """Release every intermediate buffer reachable from this output.

        Leaves (parameters and inputs) keep their data; everything the
        forward pass allocated is deregistered from the accountant.
        """
        stack = [self]
        seen: set[int] = set()
        while stack:
            node = stack.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            ctx = node._ctx
            if ctx is None:
                continue
            stack.extend(ctx[1])
            node._ctx = None
            node._release_grad()
            if node._data is not None:
                ACCOUNTANT.release(node._token)
                node._data = None


class Parameter(Tensor):
    """Trainable leaf tensor with a stable dotted name for checkpoints."""

    __slots__ = ("name",)

    def __init__(self, data, name: str = "", dtype=None):
        super().__init__(data, dtype=dtype, requires_grad=True)
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape}, dtype={self.dtype})"


def make_op(name: str,
            out_data: np.ndarray,
            parents: Sequence[Tensor],
            backward_fn: Callable,
            check_finite: bool = True) -> Tensor:
    """Wrap an op result into the tape. Central NaN/Inf surface point."""
    if check_finite and _nan_guard and not np.all(np.isfinite(out_data)):
        raise NonFiniteError(f"op '{name}' produced non-finite values")
    needs_grad = _grad_enabled and any(p.requires_grad or p._ctx is not None
                                       for p in parents)
    out = Tensor(out_data)
    if needs_grad:
        out._ctx = (name, tuple(parents), backward_fn)
    return out


def as_tensor(x, dtype=None) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x, dtype=dtype)
