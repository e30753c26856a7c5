"""2-D slice extraction and PNG encoding for study display."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from ..errors import DomainError, ShapeError

PLANES = ("axial", "coronal", "sagittal")


def extract_slice(voxels: np.ndarray, plane: str, index: int) -> np.ndarray:
    """Slice a [D,H,W] volume along an anatomical plane."""
    if voxels.ndim != 3:
        raise ShapeError(f"expected a 3-D volume, got shape {voxels.shape}")
    if plane not in PLANES:
        raise DomainError(f"plane must be one of {PLANES}, got {plane!r}")
    axis = PLANES.index(plane)
    if not (0 <= index < voxels.shape[axis]):
        raise DomainError(
            f"slice index {index} out of range for axis {axis} "
            f"(size {voxels.shape[axis]})")
    return np.take(voxels, index, axis=axis)


def slice_to_png(voxels: np.ndarray, plane: str, index: int,
                 lo: float = -1.0, hi: float = 1.0) -> bytes:
    """Encode one slice of a normalized volume as 8-bit grayscale PNG."""
    sl = extract_slice(voxels, plane, index).astype(np.float64)
    span = hi - lo
    if span <= 0:
        raise DomainError(f"empty display window [{lo}, {hi}]")
    scaled = np.clip((sl - lo) / span, 0.0, 1.0)
    img = Image.fromarray(np.round(scaled * 255.0).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def png_to_array(data: bytes) -> np.ndarray:
    """Decode a grayscale PNG back to a float array in [0, 1]."""
    img = Image.open(io.BytesIO(data)).convert("L")
    return np.asarray(img, dtype=np.float64) / 255.0
