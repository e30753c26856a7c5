"""Model-vs-real evaluation reports (FID + MMD per model)."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from ..errors import DataError, DegenerateBatchError
from ..data.metaimage import read_metaimage
from .features import extract_features
from .fid import fid, fit_stats
from .mmd import KernelSpec, median_heuristic, mmd2


@dataclass(frozen=True)
class ModelScore:
    name: str
    fid: float
    mmd2: float
    n_samples: int


@dataclass(frozen=True)
class EvalReport:
    extractor_fingerprint: str
    kernel_bandwidth: float
    n_real: int
    scores: Dict[str, ModelScore] = field(default_factory=dict)

    def render(self) -> str:
        lines = [
            "evaluation report",
            f"  extractor: {self.extractor_fingerprint}",
            f"  kernel:    gaussian, bandwidth {self.kernel_bandwidth:.6g}",
            f"  real samples: {self.n_real}",
            f"  {'model':<20} {'FID':>12} {'MMD^2':>12} {'n':>6}",
        ]
        for name in sorted(self.scores):
            s = self.scores[name]
            lines.append(f"  {name:<20} {s.fid:>12.6f} {s.mmd2:>12.6f} "
                         f"{s.n_samples:>6d}")
        return "\n".join(lines) + "\n"


def evaluate_arrays(real: np.ndarray, generated: Dict[str, np.ndarray],
                    extractor, kernel: KernelSpec = KernelSpec()) -> EvalReport:
    """Score each generated set against the real set with shared settings.

    The kernel bandwidth is resolved once (median heuristic on real vs the
    first model's features) so every model is scored on the same scale.
    """
    if real.shape[0] < 2:
        raise DegenerateBatchError(f"need >= 2 real volumes, got {real.shape[0]}")
    f_real = extract_features(real, extractor)
    stats_real = fit_stats(f_real)

    feats = {}
    for name, vols in generated.items():
        if vols.shape[0] < 2:
            raise DegenerateBatchError(
                f"need >= 2 generated volumes for {name}, got {vols.shape[0]}")
        feats[name] = extract_features(vols, extractor)

    bandwidth = kernel.bandwidth
    if bandwidth is None:
        first = feats[sorted(feats)[0]] if feats else f_real
        bandwidth = median_heuristic(f_real, first)
    resolved = KernelSpec(kind=kernel.kind, bandwidth=bandwidth)

    scores = {}
    for name, f_gen in feats.items():
        scores[name] = ModelScore(
            name=name,
            fid=fid(stats_real, fit_stats(f_gen)),
            mmd2=mmd2(f_real, f_gen, resolved),
            n_samples=f_gen.shape[0])
    return EvalReport(extractor_fingerprint=extractor.fingerprint(),
                      kernel_bandwidth=bandwidth,
                      n_real=real.shape[0], scores=scores)


def load_volume_dir(path: str, limit: Optional[int] = None) -> np.ndarray:
    """Stack every .mhd volume under a directory into [N,1,D,H,W]."""
    names = sorted(f for f in os.listdir(path) if f.endswith(".mhd"))
    if limit is not None:
        names = names[:limit]
    if not names:
        raise DataError(f"no .mhd volumes under {path}")
    vols = []
    shape = None
    for f in names:
        v = read_metaimage(os.path.join(path, f))
        if shape is None:
            shape = v.voxels.shape
        elif v.voxels.shape != shape:
            raise DataError(
                f"{f}: shape {v.voxels.shape} differs from first volume {shape}")
        vols.append(np.asarray(v.voxels, dtype=np.float32))
    return np.stack(vols)[:, None]
