"""Network building blocks over the tensor library.

Modules hold named Parameters plus non-trainable buffers (normalization
running stats, spectral-norm power vectors). Parameter registration order
follows attribute definition order, so construction from a config is
deterministic and parameter counts are pure functions of the config.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..tensor import ops
from ..tensor.core import Parameter, Tensor
from ..tensor.ops import SpectralState


class Module:
    """Minimal container: recursive parameter/buffer collection, train flag."""

    def __init__(self):
        self.training = True

    def _children(self) -> Iterable["Module"]:
        for v in self.__dict__.values():
            if isinstance(v, Module):
                yield v
            elif isinstance(v, (list, tuple)):
                for item in v:
                    if isinstance(item, Module):
                        yield item

    def parameters(self) -> List[Parameter]:
        out: List[Parameter] = []
        for v in self.__dict__.values():
            if isinstance(v, Parameter):
                out.append(v)
            elif isinstance(v, Module):
                out.extend(v.parameters())
            elif isinstance(v, (list, tuple)):
                for item in v:
                    if isinstance(item, Parameter):
                        out.append(item)
                    elif isinstance(item, Module):
                        out.extend(item.parameters())
        return out

    def local_buffers(self) -> Dict[str, np.ndarray]:
        return {}

    def buffers(self) -> Dict[str, np.ndarray]:
        out = dict(self.local_buffers())
        for child in self._children():
            out.update(child.buffers())
        return out

    def train(self, flag: bool = True) -> None:
        self.training = flag
        for child in self._children():
            child.train(flag)

    def eval(self) -> None:
        self.train(False)

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())


def _init_weight(shape, fan_in: int, rng: np.random.Generator, dtype) -> np.ndarray:
    return (rng.standard_normal(shape) / np.sqrt(fan_in)).astype(dtype)


def _triple(k) -> Tuple[int, int, int]:
    return (k, k, k) if isinstance(k, int) else tuple(k)


class Conv3d(Module):

    def __init__(self, cin: int, cout: int, kernel, stride=1, padding=0,
                 bias: bool = True, name: str = "conv",
                 rng: Optional[np.random.Generator] = None, dtype=np.float32):
        super().__init__()
        k = _triple(kernel)
        fan_in = cin * k[0] * k[1] * k[2]
        self.weight = Parameter(_init_weight((cout, cin) + k, fan_in, rng, dtype),
                                name=name + ".weight")
        self.bias = (Parameter(np.zeros(cout, dtype=dtype), name=name + ".bias")
                     if bias else None)
        self.stride, self.padding = stride, padding

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv3d(x, self.weight, self.bias, self.stride, self.padding)


class ConvTranspose3d(Module):

    def __init__(self, cin: int, cout: int, kernel, stride=1, padding=0,
                 bias: bool = True, name: str = "convt",
                 rng: Optional[np.random.Generator] = None, dtype=np.float32):
        super().__init__()
        k = _triple(kernel)
        fan_in = cin * k[0] * k[1] * k[2]
        self.weight = Parameter(_init_weight((cin, cout) + k, fan_in, rng, dtype),
                                name=name + ".weight")
        self.bias = (Parameter(np.zeros(cout, dtype=dtype), name=name + ".bias")
                     if bias else None)
        self.stride, self.padding = stride, padding

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv_transpose3d(x, self.weight, self.bias, self.stride,
                                    self.padding)


class SNConv3d(Module):
    """Conv whose weight is spectrally normalized on every forward pass."""

    def __init__(self, cin: int, cout: int, kernel, stride=1, padding=0,
                 bias: bool = True, power_iters: int = 1, name: str = "snconv",
                 rng: Optional[np.random.Generator] = None, dtype=np.float32):
        super().__init__()
        k = _triple(kernel)
        fan_in = cin * k[0] * k[1] * k[2]
        self.weight = Parameter(_init_weight((cout, cin) + k, fan_in, rng, dtype),
                                name=name + ".weight")
        self.bias = (Parameter(np.zeros(cout, dtype=dtype), name=name + ".bias")
                     if bias else None)
        self.stride, self.padding = stride, padding
        self.power_iters = power_iters
        self.sn_state = SpectralState.init(cout, fan_in, rng, dtype)
        self._name = name

    def forward(self, x: Tensor) -> Tensor:
        # frozen modules keep their spectral estimate fixed for determinism
        iters = self.power_iters if self.training else 0
        w = ops.spectral_normalize(self.weight, self.sn_state, iters)
        return ops.conv3d(x, w, self.bias, self.stride, self.padding)

    def local_buffers(self) -> Dict[str, np.ndarray]:
        return {self._name + ".sn_u": self.sn_state.u,
                self._name + ".sn_v": self.sn_state.v}


class BatchNorm3d(Module):

    def __init__(self, channels: int, name: str = "bn", momentum: float = 0.1,
                 eps: float = 1e-5, dtype=np.float32):
        super().__init__()
        self.gamma = Parameter(np.ones(channels, dtype=dtype), name=name + ".gamma")
        self.beta = Parameter(np.zeros(channels, dtype=dtype), name=name + ".beta")
        self.running_mean = np.zeros(channels, dtype=np.float64)
        self.running_var = np.ones(channels, dtype=np.float64)
        self.momentum, self.eps = momentum, eps
        self._name = name

    def forward(self, x: Tensor) -> Tensor:
        return ops.batch_norm3d(x, self.gamma, self.beta, self.running_mean,
                                self.running_var, self.training,
                                self.momentum, self.eps)

    def local_buffers(self) -> Dict[str, np.ndarray]:
        return {self._name + ".running_mean": self.running_mean,
                self._name + ".running_var": self.running_var}


class GroupNorm(Module):

    def __init__(self, channels: int, groups: int, name: str = "gn",
                 eps: float = 1e-5, dtype=np.float32):
        super().__init__()
        self.gamma = Parameter(np.ones(channels, dtype=dtype), name=name + ".gamma")
        self.beta = Parameter(np.zeros(channels, dtype=dtype), name=name + ".beta")
        self.groups, self.eps = groups, eps

    def forward(self, x: Tensor) -> Tensor:
        return ops.group_norm(x, self.groups, self.gamma, self.beta, self.eps)


class Linear(Module):

    def __init__(self, cin: int, cout: int, bias: bool = True, name: str = "linear",
                 rng: Optional[np.random.Generator] = None, dtype=np.float32):
        super().__init__()
        self.weight = Parameter(_init_weight((cin, cout), cin, rng, dtype),
                                name=name + ".weight")
        self.bias = (Parameter(np.zeros(cout, dtype=dtype), name=name + ".bias")
                     if bias else None)

    def forward(self, x: Tensor) -> Tensor:
        return ops.linear(x, self.weight, self.bias)
