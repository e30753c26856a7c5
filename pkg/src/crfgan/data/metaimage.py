"""MetaImage (.mhd / .raw) reading and writing.

Covers the uncompressed local-file flavor: a text header of ``Key = Value``
lines next to a raw little-endian payload. Voxels are returned in (z, y, x)
axis order; DimSize and ElementSpacing in the header are x-fastest, so both
are reversed on the way in and restored on the way out.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..errors import DataError

_ELEMENT_TYPES = {"MET_SHORT": np.dtype("<i2"), "MET_FLOAT": np.dtype("<f4")}
_DTYPE_NAMES = {np.dtype(np.int16): "MET_SHORT", np.dtype(np.float32): "MET_FLOAT"}


@dataclass
class Volume:
    """A scalar voxel grid with physical spacing and an intensity domain."""

    voxels: np.ndarray                      # [D, H, W], (z, y, x) order
    spacing: Tuple[float, float, float]     # mm per axis, same order
    domain: str = "HU"                      # "HU" or "normalized"

    def __post_init__(self):
        if self.voxels.ndim != 3:
            raise DataError(f"volume must be 3-D, got shape {self.voxels.shape}")
        if self.domain not in ("HU", "normalized"):
            raise DataError(f"unknown intensity domain {self.domain!r}")

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.voxels.shape


def _parse_header(text: str, path: str) -> Dict[str, str]:
    fields: Dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"malformed header line in {path}: {line!r}")
        key, value = line.split("=", 1)
        fields[key.strip()] = value.strip()
    return fields


def read_metaimage(mhd_path: str) -> Volume:
    """Load an .mhd header plus its raw payload as an HU volume."""
    with open(mhd_path, "r", encoding="ascii") as f:
        fields = _parse_header(f.read(), mhd_path)

    for key in ("NDims", "DimSize", "ElementType", "ElementDataFile"):
        if key not in fields:
            raise DataError(f"{mhd_path}: missing header field {key}")
    if fields["NDims"] != "3":
        raise DataError(f"{mhd_path}: NDims must be 3, got {fields['NDims']}")
    if fields.get("CompressedData", "False").lower() == "true":
        raise DataError(f"{mhd_path}: compressed payloads not supported")
    etype = fields["ElementType"]
    if etype not in _ELEMENT_TYPES:
        raise DataError(f"{mhd_path}: unsupported ElementType {etype} "
                        f"(supported: {sorted(_ELEMENT_TYPES)})")
    dtype = _ELEMENT_TYPES[etype]
    msb = fields.get("ElementByteOrderMSB", fields.get("BinaryDataByteOrderMSB",
                                                       "False"))
    if msb.lower() == "true":
        dtype = dtype.newbyteorder(">")

    try:
        dims_xyz = tuple(int(v) for v in fields["DimSize"].split())
    except ValueError as exc:
        raise DataError(f"{mhd_path}: bad DimSize {fields['DimSize']!r}") from exc
    if len(dims_xyz) != 3 or any(d < 1 for d in dims_xyz):
        raise DataError(f"{mhd_path}: bad DimSize {dims_xyz}")

    spacing_xyz = (1.0, 1.0, 1.0)
    if "ElementSpacing" in fields:
        spacing_xyz = tuple(float(v) for v in fields["ElementSpacing"].split())
        if len(spacing_xyz) != 3:
            raise DataError(f"{mhd_path}: bad ElementSpacing")

    raw_name = fields["ElementDataFile"]
    if raw_name == "LOCAL":
        raise DataError(f"{mhd_path}: inline LOCAL payloads not supported")
    raw_path = os.path.join(os.path.dirname(mhd_path) or ".", raw_name)
    payload = np.fromfile(raw_path, dtype=dtype)
    expected = dims_xyz[0] * dims_xyz[1] * dims_xyz[2]
    if payload.size != expected:
        raise DataError(
            f"{raw_path}: payload has {payload.size} elements, DimSize "
            f"{dims_xyz} needs {expected}")

    voxels = payload.reshape(dims_xyz[::-1])  # x fastest in the file
    if voxels.dtype.byteorder == ">":
        voxels = voxels.astype(voxels.dtype.newbyteorder("<"))
    return Volume(voxels=voxels, spacing=spacing_xyz[::-1], domain="HU")


def write_metaimage(vol: Volume, mhd_path: str) -> None:
    """Write header + raw pair; ``x.mhd`` gets its payload in ``x.raw``."""
    arr = np.ascontiguousarray(vol.voxels)
    if arr.dtype not in _DTYPE_NAMES:
        if np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float32)
        else:
            arr = arr.astype(np.int16)
    etype = _DTYPE_NAMES[np.dtype(arr.dtype)]

    base = os.path.splitext(os.path.basename(mhd_path))[0]
    raw_name = base + ".raw"
    raw_path = os.path.join(os.path.dirname(mhd_path) or ".", raw_name)
    dims_xyz = arr.shape[::-1]
    spacing_xyz = vol.spacing[::-1]
    header = "\n".join([
        "ObjectType = Image",
        "NDims = 3",
        "BinaryData = True",
        "BinaryDataByteOrderMSB = False",
        "CompressedData = False",
        f"DimSize = {dims_xyz[0]} {dims_xyz[1]} {dims_xyz[2]}",
        f"ElementSpacing = {spacing_xyz[0]:g} {spacing_xyz[1]:g} {spacing_xyz[2]:g}",
        f"ElementType = {etype}",
        f"ElementDataFile = {raw_name}",
    ]) + "\n"
    with open(mhd_path, "w", encoding="ascii") as f:
        f.write(header)
    arr.astype(arr.dtype.newbyteorder("<"), copy=False).tofile(raw_path)
