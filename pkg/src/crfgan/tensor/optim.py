"""Adam with bias correction on named parameters.

Moment buffers register with the byte accountant so optimizer state shows
up in peak-memory measurements. A non-finite gradient anywhere rejects the
whole step before any state mutates.
"""

from __future__ import annotations

import weakref
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, NumericalError
from .core import Parameter
from .memory import ACCOUNTANT


class Adam:

    def __init__(self, params: Sequence[Parameter], lr: float,
                 betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        if lr <= 0:
            raise ConfigError(f"learning rate must be > 0, got {lr}")
        self.params: List[Parameter] = list(params)
        self.lr = float(lr)
        self.beta1, self.beta2 = float(betas[0]), float(betas[1])
        self.eps = float(eps)
        self.t = 0
        self._m: Dict[int, np.ndarray] = {}
        self._v: Dict[int, np.ndarray] = {}
        self._tokens: List[int] = []
        for p in self.params:
            self._m[id(p)] = np.zeros_like(p.data)
            self._v[id(p)] = np.zeros_like(p.data)
            self._tokens.append(ACCOUNTANT.register(2 * p.nbytes))
        weakref.finalize(self, _release_all, list(self._tokens))

    def step(self) -> None:
        bad = []
        for p in self.params:
            if p.grad is not None and not np.all(np.isfinite(p.grad)):
                bad.append((p.name or "<unnamed>",
                            int(np.size(p.grad) - np.isfinite(p.grad).sum())))
        if bad:
            norms = ", ".join(
                f"{p.name or '<unnamed>'}={_grad_norm(p):.3e}" for p in self.params)
            raise NumericalError(
                f"non-finite gradient in {bad}; step rejected; grad norms: {norms}")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p in self.params:
            g = p.grad
            if g is None:
                continue
            m, v = self._m[id(p)], self._v[id(p)]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            d = p.data
            d -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    # -- checkpoint support ----------------------------------------------------

    def state_arrays(self) -> Dict[str, np.ndarray]:
        """Moment buffers keyed by parameter name, plus the step count."""
        out: Dict[str, np.ndarray] = {"__step__": np.asarray([self.t], dtype=np.int64)}
        for p in self.params:
            out[p.name + ".m"] = self._m[id(p)]
            out[p.name + ".v"] = self._v[id(p)]
        return out

    def load_state_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        self.t = int(arrays["__step__"][0])
        for p in self.params:
            self._m[id(p)][...] = arrays[p.name + ".m"]
            self._v[id(p)][...] = arrays[p.name + ".v"]


def _grad_norm(p: Parameter) -> float:
    if p.grad is None:
        return 0.0
    return float(np.sqrt(np.sum(np.square(p.grad, dtype=np.float64))))


def _release_all(tokens: List[int]) -> None:
    for tok in tokens:
        ACCOUNTANT.release(tok)
