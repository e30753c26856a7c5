"""Model bundles: the network set, parameter grouping, and generation paths.

``generate_full`` decodes the complete embedding in one pass (the reference
path); ``generate_stitched`` decodes halo-padded slabs and assembles them,
which is the bounded-memory path. The two agree on every voxel because the
halo equals G2's receptive-field radius (computed in config) and eval-mode
normalization is pointwise.
"""

from __future__ import annotations

from typing import Dict, List, Optional

import numpy as np

from ..errors import ShapeError
from ..tensor import no_grad, ops
from ..tensor.core import Parameter, Tensor
from .config import ArchConfig
from .layers import Module
from .networks import CrfHead, D, DLow, G1, G2, GLow, HalfEncoder


def sample_latent(rng: np.random.Generator, n: int, cfg: ArchConfig) -> Tensor:
    dt = np.float32 if cfg.precision == "float32" else np.float64
    return Tensor(rng.standard_normal((n, cfg.latent_dim)).astype(dt))


class _Bundle(Module):
    """Shared plumbing for both model variants."""

    kind = ""

    def __init__(self, cfg: ArchConfig, seed: int):
        super().__init__()
        self.cfg = cfg
        self.seed = seed

    def groups(self) -> Dict[str, List[Parameter]]:
        raise NotImplementedError

    def count_parameters(self) -> Dict[str, int]:
        counts = {name: sum(p.size for p in ps) for name, ps in self.nets().items()}
        counts["total"] = sum(counts.values())
        return counts

    def nets(self) -> Dict[str, List[Parameter]]:
        raise NotImplementedError

    # -- generation -----------------------------------------------------------

    def embed(self, z: Tensor) -> Tensor:
        return self.g1.forward(z)

    def generate_full(self, z: Tensor) -> np.ndarray:
        """Decode the complete embedding at once; [N,1,R,R,R] in [-1,1]."""
        was_training = self.training
        self.eval()
        try:
            with no_grad():
                emb = self.g1.forward(z)
                vol = self.g2.forward(emb)
                out = vol.numpy().copy()
        finally:
            self.train(was_training)
        return out

    def generate_stitched(self, z: Tensor) -> np.ndarray:
        """Decode halo-padded embedding slabs and assemble the volume."""
        cfg = self.cfg
        u, s, h = cfg.upsample, cfg.slab_extent, cfg.halo
        d_e = cfg.emb_size
        was_training = self.training
        self.eval()
        try:
            with no_grad():
                emb = self.g1.forward(z)
                n = emb.shape[0]
                canvas = np.empty((n, 1, cfg.resolution, cfg.resolution,
                                   cfg.resolution), dtype=emb.dtype)
                for r in range(0, d_e, s):
                    w0, w1 = max(0, r - h), min(d_e, r + s + h)
                    window = ops.slice_axis(emb, 2, w0, w1)
                    y = self.g2.forward(window)
                    lo = (r - w0) * u
                    canvas[:, :, r * u:(r + s) * u] = y.numpy()[:, :, lo:lo + s * u]
        finally:
            self.train(was_training)
        return canvas


class CrfganBundle(_Bundle):
    """G1, G2, D, half-encoder, and the CRF embedding critic."""

    kind = "crfgan"

    def __init__(self, cfg: ArchConfig, seed: int):
        super().__init__(cfg, seed)
        rng = np.random.default_rng(seed)
        self.g1 = G1(cfg, rng)
        self.g2 = G2(cfg, rng)
        self.d = D(cfg, rng)
        self.he = HalfEncoder(cfg, rng)
        self.crf = CrfHead(cfg, rng)

    def nets(self) -> Dict[str, List[Parameter]]:
        return {"G1": self.g1.parameters(), "G2": self.g2.parameters(),
                "D": self.d.parameters(), "hE": self.he.parameters(),
                "CRF": self.crf.parameters()}

    def groups(self) -> Dict[str, List[Parameter]]:
        return {"G": self.g1.parameters() + self.g2.parameters(),
                "D": self.d.parameters(),
                "CRF": self.crf.parameters(),
                "hE": self.he.parameters()}


class BaselineBundle(_Bundle):
    """Same core networks with a low-res generator/critic pair instead of
    the CRF head (the memory/speed comparison baseline)."""

    kind = "baseline"

    def __init__(self, cfg: ArchConfig, seed: int):
        super().__init__(cfg, seed)
        rng = np.random.default_rng(seed)
        self.g1 = G1(cfg, rng)
        self.g2 = G2(cfg, rng)
        self.d = D(cfg, rng)
        self.he = HalfEncoder(cfg, rng)
        self.g_low = GLow(cfg, rng)
        self.d_low = DLow(cfg, rng)

    def nets(self) -> Dict[str, List[Parameter]]:
        return {"G1": self.g1.parameters(), "G2": self.g2.parameters(),
                "D": self.d.parameters(), "hE": self.he.parameters(),
                "Glow": self.g_low.parameters(), "Dlow": self.d_low.parameters()}

    def groups(self) -> Dict[str, List[Parameter]]:
        return {"G": self.g1.parameters() + self.g2.parameters() + self.g_low.parameters(),
                "D": self.d.parameters(),
                "Dlow": self.d_low.parameters(),
                "hE": self.he.parameters()}


def make_bundle(cfg: ArchConfig, seed: int, baseline: bool = False) -> _Bundle:
    return BaselineBundle(cfg, seed) if baseline else CrfganBundle(cfg, seed)
