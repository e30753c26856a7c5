"""Feature extraction for distribution metrics.

Both extractors are deterministic and fingerprinted: every evaluation
report records a hash of the extractor's identity and weights, since
absolute metric values are meaningless without it.
"""

from __future__ import annotations

import hashlib
from typing import Callable

import numpy as np

from ..errors import ShapeError
from ..tensor import no_grad
from ..tensor.core import Tensor


class HalfEncoderFeatures:
    """Pooled penultimate activations of a frozen half-encoder."""

    def __init__(self, he, name: str = "half-encoder"):
        self.he = he
        self.name = name

    def __call__(self, volumes: np.ndarray) -> np.ndarray:
        if volumes.ndim != 5 or volumes.shape[1] != 1:
            raise ShapeError(f"expected [N,1,D,H,W] volumes, got {volumes.shape}")
        was_training = self.he.training
        self.he.eval()
        try:
            with no_grad():
                dtype = self.he.parameters()[0].dtype
                out = self.he.features(Tensor(volumes.astype(dtype)))
                feats = out.numpy().copy()
        finally:
            self.he.train(was_training)
        return np.asarray(feats, dtype=np.float64)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.name.encode())
        for p in self.he.parameters():
            h.update(p.name.encode())
            h.update(np.ascontiguousarray(p.data).tobytes())
        return h.hexdigest()[:16]


class AvgPoolFeatures:
    """Model-free features: block-mean downsample to a small cube, flattened.

    Useful when no trained encoder exists yet (e.g. measuring an untrained
    model against data); fully determined by the grid size.
    """

    def __init__(self, grid: int = 4):
        if grid < 1:
            raise ShapeError(f"grid must be >= 1, got {grid}")
        self.grid = grid

    def __call__(self, volumes: np.ndarray) -> np.ndarray:
        if volumes.ndim != 5 or volumes.shape[1] != 1:
            raise ShapeError(f"expected [N,1,D,H,W] volumes, got {volumes.shape}")
        n, _, d, h, w = volumes.shape
        g = self.grid
        if d % g or h % g or w % g:
            raise ShapeError(f"volume {volumes.shape[2:]} not divisible by grid {g}")
        blocks = volumes.astype(np.float64).reshape(
            n, g, d // g, g, h // g, g, w // g)
        return blocks.mean(axis=(2, 4, 6)).reshape(n, g * g * g)

    def fingerprint(self) -> str:
        return f"avgpool-grid{self.grid}"


def extract_features(volumes: np.ndarray, extractor: Callable) -> np.ndarray:
    """Apply an extractor to [N,1,D,H,W] volumes, returning [N,F] float64."""
    feats = extractor(volumes)
    feats = np.asarray(feats, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] != volumes.shape[0]:
        raise ShapeError(
            f"extractor returned {feats.shape}, expected [{volumes.shape[0]}, F]")
    return feats
