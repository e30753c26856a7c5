"""Self-describing binary checkpoints.

Layout: 4-byte magic, uint32 format version, uint64 manifest length, a
sorted-keys JSON manifest, then raw little-endian array payloads at the
offsets the manifest declares. Writing the same state twice produces
byte-identical files, which makes resume tests exact.
"""

from __future__ import annotations

import json
from typing import Dict, Optional

import numpy as np

from ..errors import CheckpointError
from ..models.bundle import make_bundle
from ..models.config import config_from_dict
from .loop import LossBreakdown, TrainConfig, Trainer

MAGIC = b"CRFG"
VERSION = 1


def _le_dtype(dt: np.dtype) -> str:
    s = np.dtype(dt).newbyteorder("<").str
    return s


def _collect_arrays(trainer: Trainer) -> Dict[str, np.ndarray]:
    b = trainer.bundle
    out: Dict[str, np.ndarray] = {}
    for p in b.parameters():
        out["param." + p.name] = p.data
    for name, buf in b.buffers().items():
        out["buffer." + name] = buf
    for gname, opt in trainer.optimizers.items():
        for key, arr in opt.state_arrays().items():
            out[f"opt.{gname}.{key}"] = arr
    return out


def save_checkpoint(trainer: Trainer, path: str) -> None:
    """Serialize bundle, optimizer state, rng state, and loss history."""
    arrays = _collect_arrays(trainer)
    entries = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        entries.append({"name": name, "dtype": _le_dtype(arr.dtype),
                        "shape": list(arr.shape), "offset": offset,
                        "nbytes": int(arr.nbytes)})
        offset += arr.nbytes
    manifest = {
        "arch": trainer.cfg.to_dict(),
        "arrays": entries,
        "baseline": trainer.bundle.kind == "baseline",
        "bundle_seed": trainer.bundle.seed,
        "history": [bd.to_dict() for bd in trainer.history],
        "precision": trainer.cfg.precision,
        "rng_state": trainer.rng.bit_generator.state,
        "step_count": trainer.step_count,
        "train": trainer.tcfg.to_dict(),
    }
    blob = json.dumps(manifest, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(np.array([VERSION], dtype="<u4").tobytes())
        f.write(np.array([len(blob)], dtype="<u8").tobytes())
        f.write(blob)
        for name in sorted(arrays):
            arr = np.ascontiguousarray(arrays[name])
            f.write(arr.astype(_le_dtype(arr.dtype), copy=False).tobytes())


def read_manifest(path: str) -> dict:
    with open(path, "rb") as f:
        head = f.read(16)
        if len(head) < 16 or head[:4] != MAGIC:
            raise CheckpointError(f"not a checkpoint file: {path}")
        version = int(np.frombuffer(head[4:8], dtype="<u4")[0])
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        mlen = int(np.frombuffer(head[8:16], dtype="<u8")[0])
        blob = f.read(mlen)
        if len(blob) != mlen:
            raise CheckpointError(f"truncated manifest in {path}")
        try:
            return json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"corrupt manifest in {path}: {exc}") from exc


def load_checkpoint(path: str, precision: Optional[str] = None) -> Trainer:
    """Rebuild a trainer mid-run; the resumed step stream is bit-exact.

    ``precision`` is an expectation check: loading a checkpoint written
    under a different precision is refused rather than silently cast.
    """
    manifest = read_manifest(path)
    for key in ("arch", "arrays", "baseline", "precision", "rng_state",
                "step_count", "train"):
        if key not in manifest:
            raise CheckpointError(f"manifest missing key {key!r} in {path}")
    if precision is not None and manifest["precision"] != precision:
        raise CheckpointError(
            f"checkpoint precision {manifest['precision']} does not match "
            f"requested {precision}; refusing to cast")

    cfg = config_from_dict(manifest["arch"])
    bundle = make_bundle(cfg, seed=manifest.get("bundle_seed", 0),
                         baseline=manifest["baseline"])
    tcfg = TrainConfig(**manifest["train"])
    trainer = Trainer(bundle, tcfg)

    header = 16 + len(json.dumps(manifest, sort_keys=True,
                                 separators=(",", ":")).encode("utf-8"))
    arrays: Dict[str, np.ndarray] = {}
    with open(path, "rb") as f:
        data = f.read()
    for e in manifest["arrays"]:
        start = header + e["offset"]
        end = start + e["nbytes"]
        if end > len(data):
            raise CheckpointError(f"truncated payload for {e['name']} in {path}")
        arr = np.frombuffer(data[start:end], dtype=e["dtype"]).reshape(e["shape"])
        arrays[e["name"]] = arr

    params = {p.name: p for p in bundle.parameters()}
    buffers = bundle.buffers()
    for name, arr in arrays.items():
        if name.startswith("param."):
            key = name[len("param."):]
            if key not in params:
                raise CheckpointError(f"unknown parameter {key!r} in {path}")
            if params[key].shape != arr.shape:
                raise CheckpointError(
                    f"shape mismatch for {key}: checkpoint {arr.shape}, "
                    f"model {params[key].shape}")
            params[key].data[...] = arr
        elif name.startswith("buffer."):
            key = name[len("buffer."):]
            if key not in buffers:
                raise CheckpointError(f"unknown buffer {key!r} in {path}")
            buffers[key][...] = arr
    for gname, opt in trainer.optimizers.items():
        prefix = f"opt.{gname}."
        state = {name[len(prefix):]: arr for name, arr in arrays.items()
                 if name.startswith(prefix)}
        if state:
            opt.load_state_arrays(state)

    trainer.rng.bit_generator.state = manifest["rng_state"]
    trainer.step_count = manifest["step_count"]
    trainer.history = [
        LossBreakdown(h["l_gan"], h["l_crf"], h["l_reconstruction"], h["l_total"])
        for h in manifest.get("history", [])]
    return trainer
