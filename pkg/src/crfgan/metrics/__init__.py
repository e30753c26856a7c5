from .evaluate import EvalReport, ModelScore, evaluate_arrays, load_volume_dir
from .features import AvgPoolFeatures, HalfEncoderFeatures, extract_features
from .fid import (
    FeatureStats,
    fid,
    fit_stats,
    newton_schulz_sqrt,
    sqrtm_psd,
    trace_sqrt_product,
)
from .mmd import KernelSpec, median_heuristic, mmd2

__all__ = [
    "AvgPoolFeatures",
    "EvalReport",
    "FeatureStats",
    "HalfEncoderFeatures",
    "KernelSpec",
    "ModelScore",
    "evaluate_arrays",
    "extract_features",
    "fid",
    "fit_stats",
    "load_volume_dir",
    "median_heuristic",
    "mmd2",
    "newton_schulz_sqrt",
    "sqrtm_psd",
    "trace_sqrt_product",
]
