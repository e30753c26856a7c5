"""HU windowing, blank-slice handling, and trilinear resizing.

The normalization maps the window [-1024, 600] affinely onto [-1, 1]:
``v' = 2 * (clip(v, -1024, 600) + 1024) / 1624 - 1``. Axial slices whose
voxels all sit below -1000 HU (air) are replaced with 0 HU before the
mapping, so they land at the window's image of zero rather than at -1.
"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from ..errors import DataError, DomainError
from .metaimage import Volume

HU_MIN = -1024.0
HU_MAX = 600.0
BLANK_HU_THRESHOLD = -1000.0


def window_normalize(hu: np.ndarray) -> np.ndarray:
    """Map HU values through the fixed window onto [-1, 1]."""
    v = np.clip(np.asarray(hu, dtype=np.float64), HU_MIN, HU_MAX)
    return 2.0 * (v - HU_MIN) / (HU_MAX - HU_MIN) - 1.0


def zero_blank_slices(hu: np.ndarray,
                      threshold: float = BLANK_HU_THRESHOLD) -> np.ndarray:
    """Replace all-air axial slices with 0 HU; other slices untouched."""
    out = np.array(hu, dtype=np.float64, copy=True)
    blank = np.all(out < threshold, axis=(1, 2))
    out[blank] = 0.0
    return out


def resize_trilinear(vol: np.ndarray, target: Sequence[int]) -> np.ndarray:
    """Separable linear resampling with corner alignment.

    Output index i on an axis of source length S and target length T maps
    to source coordinate i * (S - 1) / (T - 1); a target length of 1 is
    rejected since corner alignment needs two samples.
    """
    arr = np.asarray(vol, dtype=np.float64)
    if arr.ndim != 3:
        raise DataError(f"expected 3-D volume, got shape {arr.shape}")
    target = tuple(int(t) for t in target)
    if len(target) != 3 or any(t < 2 for t in target):
        raise DomainError(f"target dims must each be >= 2, got {target}")
    out = arr
    for axis in range(3):
        s, t = out.shape[axis], target[axis]
        if s == t:
            continue
        if s == 1:
            out = np.repeat(out, t, axis=axis)
            continue
        pos = np.arange(t, dtype=np.float64) * (s - 1) / (t - 1)
        lo = np.minimum(pos.astype(np.int64), s - 2)
        frac = pos - lo
        shape = [1, 1, 1]
        shape[axis] = t
        w = frac.reshape(shape)
        out = (np.take(out, lo, axis=axis) * (1.0 - w)
               + np.take(out, lo + 1, axis=axis) * w)
    return out


def preprocess(vol: Volume, target: Tuple[int, int, int],
               dtype=np.float32) -> Volume:
    """Full pipeline: zero blank slices (HU), window to [-1,1], resize."""
    if vol.domain != "HU":
        raise DataError(f"preprocess expects an HU volume, got {vol.domain}")
    if vol.voxels.size == 0:
        raise DataError("empty volume")
    if not np.all(np.isfinite(vol.voxels)):
        raise DataError("non-finite HU values in input volume")
    hu = zero_blank_slices(vol.voxels)
    norm = window_normalize(hu)
    resized = resize_trilinear(norm, target)
    spacing = tuple(
        sp * (max(s - 1, 1) / (t - 1))
        for sp, s, t in zip(vol.spacing, vol.voxels.shape, target))
    # linear interpolation of in-range data cannot escape the range
    return Volume(voxels=resized.astype(dtype), spacing=spacing,
                  domain="normalized")
