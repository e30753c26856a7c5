"""Dense tensors, reverse-mode autodiff, conv kernels, Adam, byte accounting."""

from . import kernels, ops
from .core import Parameter, Tensor, as_tensor, grad_enabled, make_op, nan_guard, no_grad
from .memory import ACCOUNTANT, live_bytes, peak_bytes, reset_peak
from .optim import Adam

__all__ = [
    "ACCOUNTANT", "Adam", "Parameter", "Tensor", "as_tensor", "grad_enabled",
    "kernels", "live_bytes", "make_op", "nan_guard", "no_grad", "ops",
    "peak_bytes", "reset_peak",
]
