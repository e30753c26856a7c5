"""Procedural lung-like CT phantoms.

Two ellipsoidal air-density regions in a soft-tissue background, with
optional spherical nodules placed inside the lungs, plus Gaussian noise.
Intentionally crude: the point is a deterministic, label-free stand-in
with CT-like intensity statistics at desk resolutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..errors import DomainError
from .metaimage import Volume

BACKGROUND_HU = 40.0
LUNG_HU = -800.0
NODULE_HU = 0.0
AIR_HU = -1000.0


@dataclass(frozen=True)
class PhantomSpec:
    """Everything that determines a phantom, so same spec → same voxels."""

    seed: int = 0
    resolution: int = 32
    # ellipsoid centers and semi-axes as fractions of the cube edge;
    # axis order (z, y, x) to match the voxel grid
    lung_centers: Tuple[Tuple[float, float, float], ...] = (
        (0.50, 0.50, 0.30), (0.50, 0.50, 0.70))
    lung_semi_axes: Tuple[Tuple[float, float, float], ...] = (
        (0.34, 0.30, 0.16), (0.34, 0.30, 0.16))
    nodules: int = 2
    nodule_radius_frac: Tuple[float, float] = (0.03, 0.08)
    noise_hu: float = 20.0
    body_margin: float = 0.04

    def __post_init__(self):
        if self.resolution < 8:
            raise DomainError(f"resolution must be >= 8, got {self.resolution}")
        if len(self.lung_centers) != len(self.lung_semi_axes):
            raise DomainError("one semi-axis triple required per lung center")
        for c, a in zip(self.lung_centers, self.lung_semi_axes):
            for ci, ai in zip(c, a):
                if ai <= 0:
                    raise DomainError(f"semi-axis must be positive, got {ai}")
                if ci - ai < 0.0 or ci + ai > 1.0:
                    raise DomainError(
                        f"lung ellipsoid (center {c}, semi-axes {a}) exceeds "
                        f"the volume")
        if self.nodules < 0:
            raise DomainError("nodule count must be >= 0")
        lo, hi = self.nodule_radius_frac
        if not (0 < lo <= hi):
            raise DomainError(f"bad nodule radius range {self.nodule_radius_frac}")
        if hi >= min(min(a) for a in self.lung_semi_axes):
            raise DomainError("nodule radius exceeds lung semi-axes")


def _ellipsoid_mask(res: int, center, semi_axes) -> np.ndarray:
    coords = (np.arange(res, dtype=np.float64) + 0.5) / res
    z = coords.reshape(-1, 1, 1)
    y = coords.reshape(1, -1, 1)
    x = coords.reshape(1, 1, -1)
    cz, cy, cx = center
    az, ay, ax = semi_axes
    q = (((z - cz) / az) ** 2 + ((y - cy) / ay) ** 2 + ((x - cx) / ax) ** 2)
    return q <= 1.0


def make_phantom(spec: PhantomSpec) -> Volume:
    """Generate one deterministic HU phantom from a spec."""
    rng = np.random.default_rng(spec.seed)
    res = spec.resolution
    vox = np.full((res, res, res), BACKGROUND_HU, dtype=np.float64)

    # air frame around the body so blank-slice logic has something to find
    m = max(1, int(round(spec.body_margin * res)))
    body = np.zeros_like(vox, dtype=bool)
    body[m:res - m, m:res - m, m:res - m] = True
    vox[~body] = AIR_HU

    lungs = np.zeros_like(body)
    for center, axes in zip(spec.lung_centers, spec.lung_semi_axes):
        lungs |= _ellipsoid_mask(res, center, axes)
    vox[lungs] = LUNG_HU

    placed = 0
    attempts = 0
    while placed < spec.nodules:
        attempts += 1
        if attempts > 200 * max(1, spec.nodules):
            raise DomainError(
                f"could not place {spec.nodules} nodules inside the lungs")
        k = rng.integers(0, len(spec.lung_centers))
        center = np.asarray(spec.lung_centers[k])
        axes = np.asarray(spec.lung_semi_axes[k])
        radius = rng.uniform(*spec.nodule_radius_frac)
        # sample inside the ellipsoid shrunk by the nodule radius
        margin = 1.0 - radius / axes.min()
        if margin <= 0:
            continue
        offset = rng.uniform(-margin, margin, size=3) * axes
        pos = center + offset
        if np.sum((offset / axes) ** 2) > margin ** 2:
            continue
        ball = _ellipsoid_mask(res, pos, (radius, radius, radius))
        if not ball.any():
            continue
        vox[ball] = NODULE_HU
        placed += 1

    vox += rng.normal(0.0, spec.noise_hu, size=vox.shape)
    return Volume(voxels=vox, spacing=(1.0, 1.0, 1.0), domain="HU")


def phantom_batch(n: int, resolution: int, seed: int = 0,
                  nodules: int = 2) -> np.ndarray:
    """N preprocessed phantoms as a [N,1,R,R,R] float32 training array."""
    from .preprocess import preprocess

    out = np.empty((n, 1, resolution, resolution, resolution), dtype=np.float32)
    for i in range(n):
        spec = PhantomSpec(seed=seed * 1_000_003 + i, resolution=resolution,
                           nodules=nodules)
        vol = make_phantom(spec)
        out[i, 0] = preprocess(vol, (resolution,) * 3).voxels
    return out
