"""The generator pair, discriminator, half-encoder, CRF critic, and the
baseline's auxiliary low-resolution generator/discriminator.

All networks are built from one ArchConfig and a seeded RNG in a fixed
order, so weights, spectral vectors, and parameter counts are reproducible
from (config, seed) alone.
"""

from __future__ import annotations

import math
from typing import List, Optional, Tuple

import numpy as np

from ..errors import ConfigError, ShapeError
from ..tensor import ops
from ..tensor.core import Parameter, Tensor
from .config import ArchConfig
from .layers import (BatchNorm3d, Conv3d, ConvTranspose3d, GroupNorm, Linear,
                     Module, SNConv3d)


def _dtype(cfg: ArchConfig):
    return np.float32 if cfg.precision == "float32" else np.float64


class G1(Module):
    """Latent vector to global-structure embedding."""

    def __init__(self, cfg: ArchConfig, rng: np.random.Generator):
        super().__init__()
        dt = _dtype(cfg)
        self.base = cfg.g1_base
        self.fc = Linear(cfg.latent_dim, cfg.g1_base * 64, name="G1.fc",
                         rng=rng, dtype=dt)
        self.bn0 = BatchNorm3d(cfg.g1_base, name="G1.bn0", dtype=dt)
        widths = (cfg.g1_base,) + cfg.g1_channels
        self.ups: List[ConvTranspose3d] = []
        self.bns: List[BatchNorm3d] = []
        for i in range(len(cfg.g1_channels)):
            self.ups.append(ConvTranspose3d(widths[i], widths[i + 1], 4, 2, 1,
                                            bias=False, name=f"G1.up{i}",
                                            rng=rng, dtype=dt))
            self.bns.append(BatchNorm3d(widths[i + 1], name=f"G1.bn{i + 1}", dtype=dt))
        self.out = Conv3d(widths[-1], cfg.emb_channels, 3, 1, 1, name="G1.out",
                          rng=rng, dtype=dt)

    def forward(self, z: Tensor) -> Tensor:
        n = z.shape[0]
        h = ops.reshape(self.fc.forward(z), (n, self.base, 4, 4, 4))
        h = ops.relu(self.bn0.forward(h))
        for up, bn in zip(self.ups, self.bns):
            h = ops.relu(bn.forward(up.forward(h)))
        return ops.tanh(self.out.forward(h))


class G2(Module):
    """Embedding slab to voxel slab; accepts any depth, upsamples x4."""

    def __init__(self, cfg: ArchConfig, rng: np.random.Generator):
        super().__init__()
        dt = _dtype(cfg)
        c1, c2, c3 = cfg.g2_channels
        self.conv_in = Conv3d(cfg.emb_channels, c1, 3, 1, 1, bias=False,
                              name="G2.in", rng=rng, dtype=dt)
        self.bn_in = BatchNorm3d(c1, name="G2.bn_in", dtype=dt)
        self.up1 = ConvTranspose3d(c1, c2, 4, 2, 1, bias=False, name="G2.up1",
                                   rng=rng, dtype=dt)
        self.bn1 = BatchNorm3d(c2, name="G2.bn1", dtype=dt)
        self.up2 = ConvTranspose3d(c2, c3, 4, 2, 1, bias=False, name="G2.up2",
                                   rng=rng, dtype=dt)
        self.bn2 = BatchNorm3d(c3, name="G2.bn2", dtype=dt)
        self.out = Conv3d(c3, 1, 1, 1, 0, name="G2.out", rng=rng, dtype=dt)

    def forward(self, emb: Tensor) -> Tensor:
        h = ops.relu(self.bn_in.forward(self.conv_in.forward(emb)))
        h = ops.relu(self.bn1.forward(self.up1.forward(h)))
        h = ops.relu(self.bn2.forward(self.up2.forward(h)))
        return ops.tanh(self.out.forward(h))


def _depth_block(depth: int) -> Tuple[int, int, int]:
    """Depth-axis (kernel, stride, pad) halving thin slabs without underflow."""
    if depth >= 4:
        return 4, 2, 1
    if depth == 3:
        return 3, 2, 0
    if depth == 2:
        return 2, 2, 0
    return 1, 1, 0


def _depth_out(d: int, k: int, s: int, p: int) -> int:
    return (d + 2 * p - k) // s + 1


class D(Module):
    """Spectral-normalized slab critic emitting one realness logit."""

    def __init__(self, cfg: ArchConfig, rng: np.random.Generator,
                 in_depth: Optional[int] = None):
        super().__init__()
        dt = _dtype(cfg)
        depth = cfg.slab_voxels if in_depth is None else in_depth
        side = cfg.resolution
        n_blocks = int(math.log2(side / 4))
        if len(cfg.d_channels) != n_blocks:
            raise ConfigError(
                f"d_channels needs {n_blocks} entries for resolution {side}, "
                f"got {len(cfg.d_channels)}")
        widths = (1,) + cfg.d_channels
        self.blocks: List[SNConv3d] = []
        for i in range(n_blocks):
            kd, sd, pd = _depth_block(depth)
            self.blocks.append(SNConv3d(
                widths[i], widths[i + 1], (kd, 4, 4), (sd, 2, 2), (pd, 1, 1),
                power_iters=cfg.spectral_iters, name=f"D.block{i}", rng=rng, dtype=dt))
            depth = _depth_out(depth, kd, sd, pd)
            side //= 2
        self.final = SNConv3d(widths[-1], 1, (depth, 4, 4), 1, 0,
                              power_iters=cfg.spectral_iters, name="D.final",
                              rng=rng, dtype=dt)

    def forward(self, x: Tensor) -> Tensor:
        h = x
        for blk in self.blocks:
            h = ops.leaky_relu(blk.forward(h), 0.2)
        logit = self.final.forward(h)
        return ops.reshape(logit, (x.shape[0],))


class HalfEncoder(Module):
    """Voxel slab back to embedding slab (downsamples x4, tanh range)."""

    def __init__(self, cfg: ArchConfig, rng: np.random.Generator):
        super().__init__()
        dt = _dtype(cfg)
        h1, h2, h3 = cfg.he_channels
        g = cfg.gn_groups
        self.conv_in = Conv3d(1, h1, 3, 1, 1, bias=False, name="hE.in",
                              rng=rng, dtype=dt)
        self.gn_in = GroupNorm(h1, g, name="hE.gn_in", dtype=dt)
        self.down1 = Conv3d(h1, h2, 4, 2, 1, bias=False, name="hE.down1",
                            rng=rng, dtype=dt)
        self.gn1 = GroupNorm(h2, g, name="hE.gn1", dtype=dt)
        self.down2 = Conv3d(h2, h3, 4, 2, 1, bias=False, name="hE.down2",
                            rng=rng, dtype=dt)
        self.gn2 = GroupNorm(h3, g, name="hE.gn2", dtype=dt)
        self.out = Conv3d(h3, cfg.emb_channels, 3, 1, 1, name="hE.out",
                          rng=rng, dtype=dt)

    def forward(self, x: Tensor) -> Tensor:
        h = ops.relu(self.gn_in.forward(self.conv_in.forward(x)))
        h = ops.relu(self.gn1.forward(self.down1.forward(h)))
        h = ops.relu(self.gn2.forward(self.down2.forward(h)))
        return ops.tanh(self.out.forward(h))

    def features(self, x: Tensor) -> Tensor:
        """Penultimate activations pooled per channel (metric feature hook)."""
        h = ops.relu(self.gn_in.forward(self.conv_in.forward(x)))
        h = ops.relu(self.gn1.forward(self.down1.forward(h)))
        h = ops.relu(self.gn2.forward(self.down2.forward(h)))
        return ops.mean(h, axis=(2, 3, 4))


class CrfHead(Module):
    """Energy-based patch critic over an embedding.

    Energy is a sum of per-patch unary scores plus lambda times symmetric
    pairwise scores over face-adjacent patch pairs; realness probability is
    sigmoid(-energy). Pairwise terms are built only from elementwise
    products and squared differences, so symmetry holds by construction.
    """

    def __init__(self, cfg: ArchConfig, rng: np.random.Generator):
        super().__init__()
        dt = _dtype(cfg)
        ce = cfg.emb_channels
        self.patch = cfg.crf_patch
        self.lam = cfg.crf_lambda
        self.unary1 = Conv3d(ce, cfg.crf_hidden, 1, name="CRF.unary1",
                             rng=rng, dtype=dt)
        self.unary2 = Conv3d(cfg.crf_hidden, 1, 1, name="CRF.unary2",
                             rng=rng, dtype=dt)
        self.w_prod = Parameter(
            (rng.standard_normal(ce) / np.sqrt(ce)).astype(dt), name="CRF.w_prod")
        self.w_diff = Parameter(
            (rng.standard_normal(ce) / np.sqrt(ce)).astype(dt), name="CRF.w_diff")

    def pool_patches(self, emb: Tensor) -> Tensor:
        n, c, d, h, w = emb.shape
        pd, ph, pw = self.patch
        if d % pd or h % ph or w % pw:
            raise ConfigError(
                f"patch {self.patch} does not divide embedding {(d, h, w)}")
        g = ops.reshape(emb, (n, c, d // pd, pd, h // ph, ph, w // pw, pw))
        return ops.mean(g, axis=(3, 5, 7))

    def energy(self, emb: Tensor) -> Tensor:
        g = self.pool_patches(emb)
        n, c = g.shape[:2]
        u = self.unary2.forward(ops.relu(self.unary1.forward(g)))
        e = ops.sum_(u, axis=(1, 2, 3, 4))
        wp = ops.reshape(self.w_prod, (1, c, 1, 1, 1))
        wq = ops.reshape(self.w_diff, (1, c, 1, 1, 1))
        pair_terms = []
        for ax in (2, 3, 4):
            m = g.shape[ax]
            if m < 2:
                continue
            a = ops.slice_axis(g, ax, 0, m - 1)
            b = ops.slice_axis(g, ax, 1, m)
            prod = ops.mul(a, b)
            diff = ops.sub(a, b)
            term = ops.add(ops.mul(wp, prod), ops.mul(wq, ops.mul(diff, diff)))
            pair_terms.append(ops.sum_(term, axis=(1, 2, 3, 4)))
        if pair_terms:
            p = pair_terms[0]
            for t in pair_terms[1:]:
                p = ops.add(p, t)
            e = ops.add(e, ops.scale(p, self.lam))
        return e

    def logit(self, emb: Tensor) -> Tensor:
        """Realness logit: -energy (so sigmoid(logit) is the probability)."""
        return ops.neg(self.energy(emb))

    def score(self, emb: Tensor) -> Tensor:
        return ops.sigmoid(self.logit(emb))


class GLow(Module):
    """Baseline auxiliary: decodes the full embedding to a low-res volume."""

    def __init__(self, cfg: ArchConfig, rng: np.random.Generator):
        super().__init__()
        dt = _dtype(cfg)
        l1, l2 = cfg.low_g_channels
        self.conv1 = Conv3d(cfg.emb_channels, l1, 3, 1, 1, bias=False,
                            name="Glow.conv1", rng=rng, dtype=dt)
        self.bn1 = BatchNorm3d(l1, name="Glow.bn1", dtype=dt)
        self.conv2 = Conv3d(l1, l2, 1, bias=False, name="Glow.conv2",
                            rng=rng, dtype=dt)
        self.bn2 = BatchNorm3d(l2, name="Glow.bn2", dtype=dt)
        self.out = Conv3d(l2, 1, 1, name="Glow.out", rng=rng, dtype=dt)

    def forward(self, emb: Tensor) -> Tensor:
        h = ops.relu(self.bn1.forward(self.conv1.forward(emb)))
        h = ops.relu(self.bn2.forward(self.conv2.forward(h)))
        return ops.tanh(self.out.forward(h))


class DLow(Module):
    """Baseline auxiliary: critic on full low-resolution volumes."""

    def __init__(self, cfg: ArchConfig, rng: np.random.Generator):
        super().__init__()
        dt = _dtype(cfg)
        d1, d2, d3 = cfg.low_d_channels
        it = cfg.spectral_iters
        self.conv1 = SNConv3d(1, d1, 3, 1, 1, power_iters=it, name="Dlow.conv1",
                              rng=rng, dtype=dt)
        self.conv2 = SNConv3d(d1, d2, 4, 2, 1, power_iters=it, name="Dlow.conv2",
                              rng=rng, dtype=dt)
        self.conv3 = SNConv3d(d2, d3, 4, 2, 1, power_iters=it, name="Dlow.conv3",
                              rng=rng, dtype=dt)
        final_k = cfg.emb_size // 4
        self.final = SNConv3d(d3, 1, final_k, 1, 0, power_iters=it,
                              name="Dlow.final", rng=rng, dtype=dt)

    def forward(self, x: Tensor) -> Tensor:
        h = ops.leaky_relu(self.conv1.forward(x), 0.2)
        h = ops.leaky_relu(self.conv2.forward(h), 0.2)
        h = ops.leaky_relu(self.conv3.forward(h), 0.2)
        return ops.reshape(self.final.forward(h), (x.shape[0],))
