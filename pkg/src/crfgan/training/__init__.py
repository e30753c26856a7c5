from .checkpoint import load_checkpoint, read_manifest, save_checkpoint
from .instrument import ThroughputResult, measure_peak_memory, measure_throughput
from .loop import LossBreakdown, RunMetrics, TrainConfig, Trainer, train_step

__all__ = [
    "LossBreakdown",
    "RunMetrics",
    "ThroughputResult",
    "TrainConfig",
    "Trainer",
    "load_checkpoint",
    "measure_peak_memory",
    "measure_throughput",
    "read_manifest",
    "save_checkpoint",
    "train_step",
]
