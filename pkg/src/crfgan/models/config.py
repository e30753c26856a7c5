"""Architecture configuration: one dataclass fully determines every network.

The halo needed for stitched decoding is computed here by pulling the
output-voxel interval back through G2's layer stack with interval
arithmetic, so changing the stack can never desynchronize the halo.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, Tuple

import yaml

from ..errors import ConfigError

# (kind, kernel, stride, pad) for the depth axis of G2's stack;
# "ct" layers set the embedding-to-voxel upsampling factor
G2_STACK: Tuple[Tuple[str, int, int, int], ...] = (
    ("conv", 3, 1, 1),
    ("ct", 4, 2, 1),
    ("ct", 4, 2, 1),
    ("conv", 1, 1, 0),
)


def pull_back(layers, lo: int, hi: int) -> Tuple[int, int]:
    """Input index interval needed to produce output interval [lo, hi]."""
    for kind, k, s, p in reversed(layers):
        if kind == "conv":
            lo, hi = lo * s - p, hi * s - p + k - 1
        elif kind == "ct":
            lo = math.ceil((lo + p - (k - 1)) / s)
            hi = math.floor((hi + p) / s)
        else:
            raise ConfigError(f"unknown layer kind {kind!r}")
    return lo, hi


def upsample_factor(layers=G2_STACK) -> int:
    f = 1
    for kind, _k, s, _p in layers:
        if kind == "ct":
            f *= s
    return f


def halo_width(layers=G2_STACK, extent: int = 2) -> int:
    """Embedding voxels of context per side for exact stitched decoding."""
    u = upsample_factor(layers)
    r = 64  # any interior start index; the maps are affine in r
    lo, hi = pull_back(layers, u * r, u * (r + extent) - 1)
    return max(r - lo, hi - (r + extent - 1))


@dataclass(frozen=True)
class ArchConfig:
    name: str
    resolution: int
    latent_dim: int
    emb_channels: int
    emb_size: int
    slab_extent: int
    g1_base: int
    g1_channels: Tuple[int, ...]
    g2_channels: Tuple[int, int, int]
    d_channels: Tuple[int, ...]
    he_channels: Tuple[int, int, int]
    crf_hidden: int
    crf_patch: Tuple[int, int, int]
    crf_lambda: float
    low_g_channels: Tuple[int, ...]
    low_d_channels: Tuple[int, ...]
    gn_groups: int = 4
    spectral_iters: int = 1
    precision: str = "float32"

    def __post_init__(self):
        u = self.upsample
        if self.resolution != self.emb_size * u:
            raise ConfigError(
                f"resolution {self.resolution} != embedding {self.emb_size} x {u}")
        if self.emb_size % self.slab_extent != 0:
            raise ConfigError(
                f"embedding depth {self.emb_size} not divisible by slab extent "
                f"{self.slab_extent}")
        n_up = int(math.log2(self.emb_size / 4)) if self.emb_size > 4 else 0
        if 4 * 2 ** n_up != self.emb_size:
            raise ConfigError(f"embedding size {self.emb_size} must be 4*2^k")
        if len(self.g1_channels) != n_up:
            raise ConfigError(
                f"g1_channels needs {n_up} entries for embedding size "
                f"{self.emb_size}, got {len(self.g1_channels)}")
        n_blocks = int(math.log2(self.resolution / 4))
        if len(self.d_channels) != n_blocks:
            raise ConfigError(
                f"d_channels needs {n_blocks} entries for resolution "
                f"{self.resolution}, got {len(self.d_channels)}")
        pd, ph, pw = self.crf_patch
        if (self.emb_size % pd or self.emb_size % ph or self.emb_size % pw
                or self.slab_extent % pd):
            raise ConfigError(
                f"patch {self.crf_patch} must divide embedding {self.emb_size}^3 "
                f"and slab extent {self.slab_extent}")
        for c in self.he_channels:
            if c % self.gn_groups:
                raise ConfigError(
                    f"half-encoder width {c} not divisible by {self.gn_groups} groups")
        if self.precision not in ("float32", "float64"):
            raise ConfigError(f"precision must be float32|float64, got {self.precision}")
        if self.crf_lambda < 0:
            raise ConfigError("crf_lambda must be >= 0")

    @property
    def upsample(self) -> int:
        return upsample_factor()

    @property
    def halo(self) -> int:
        return halo_width(G2_STACK, self.slab_extent)

    @property
    def slab_count(self) -> int:
        return self.emb_size // self.slab_extent

    @property
    def slab_voxels(self) -> int:
        """Image-space depth of one training slab."""
        return self.slab_extent * self.upsample

    def with_full_volume(self) -> "ArchConfig":
        """Same architecture trained without sub-volume sampling."""
        return replace(self, name=self.name + "-full", slab_extent=self.emb_size)

    def with_precision(self, precision: str) -> "ArchConfig":
        return replace(self, precision=precision)

    def to_dict(self) -> Dict:
        return asdict(self)


def _tuples(d: Dict) -> Dict:
    out = dict(d)
    for k in ("g1_channels", "g2_channels", "d_channels", "he_channels",
              "crf_patch", "low_g_channels", "low_d_channels"):
        out[k] = tuple(out[k])
    return out


def config_from_dict(d: Dict) -> ArchConfig:
    try:
        return ArchConfig(**_tuples(d))
    except TypeError as exc:
        raise ConfigError(f"bad architecture config: {exc}") from exc


def load_config(path) -> ArchConfig:
    with open(path) as fh:
        return config_from_dict(yaml.safe_load(fh))


def save_config(cfg: ArchConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=True)


DESK32 = ArchConfig(
    name="desk32",
    resolution=32,
    latent_dim=64,
    emb_channels=8,
    emb_size=8,
    slab_extent=1,
    g1_base=24,
    g1_channels=(16,),
    g2_channels=(12, 12, 8),
    d_channels=(6, 12, 24),
    he_channels=(8, 12, 12),
    crf_hidden=16,
    crf_patch=(1, 2, 2),
    crf_lambda=1.0,
    low_g_channels=(12, 16),
    low_d_channels=(8, 16, 32),
)

DESK64 = ArchConfig(
    name="desk64",
    resolution=64,
    latent_dim=128,
    emb_channels=12,
    emb_size=16,
    slab_extent=2,
    g1_base=48,
    g1_channels=(24, 12),
    g2_channels=(18, 12, 8),
    d_channels=(6, 12, 24, 48),
    he_channels=(8, 12, 12),
    crf_hidden=16,
    crf_patch=(2, 4, 4),
    crf_lambda=1.0,
    low_g_channels=(16, 24),
    low_d_channels=(12, 24, 48),
)

# the published operating point, constructable for parameter reports only
PAPER256 = ArchConfig(
    name="paper256",
    resolution=256,
    latent_dim=1024,
    emb_channels=64,
    emb_size=64,
    slab_extent=8,
    g1_base=512,
    g1_channels=(256, 128, 64, 64),
    g2_channels=(64, 32, 16),
    d_channels=(32, 64, 128, 256, 512, 512),
    he_channels=(32, 64, 64),
    crf_hidden=64,
    crf_patch=(4, 4, 4),
    crf_lambda=1.0,
    low_g_channels=(64, 64),
    low_d_channels=(32, 64, 128),
)

PRESETS: Dict[str, ArchConfig] = {
    "desk32": DESK32,
    "desk64": DESK64,
    "paper256": PAPER256,
}
