"""Peak-memory and throughput measurement for training runs.

Memory is counted as payload bytes concurrently registered with the tensor
accountant (weights, optimizer state, activations, gradients), never OS
RSS, so repeated runs on any machine agree. The peak includes warm-up
steps by design: the quantity of interest is the maximum ever allocated.
"""

from __future__ import annotations

import gc
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..tensor import ACCOUNTANT
from .loop import TrainConfig, Trainer


@dataclass(frozen=True)
class ThroughputResult:
    iters_per_sec: float
    std: float
    steps: int
    seconds: float


def _synthetic_batch(cfg, batch_size: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    dt = np.float32 if cfg.precision == "float32" else np.float64
    shape = (batch_size, 1, cfg.resolution, cfg.resolution, cfg.resolution)
    return rng.uniform(-1.0, 1.0, size=shape).astype(dt)


def measure_peak_memory(bundle, batch_size: int, steps: int = 3,
                        tcfg: Optional[TrainConfig] = None) -> int:
    """Max concurrently-live tensor bytes over ``steps`` training updates.

    Counts everything registered at any instant: parameters, optimizer
    moments, activations, gradients, scratch. The caller should not hold
    other large tensors alive; collect them first for a clean reading.
    """
    gc.collect()
    tcfg = tcfg or TrainConfig(batch_size=batch_size)
    batch = _synthetic_batch(bundle.cfg, batch_size, seed=tcfg.seed)
    trainer = Trainer(bundle, tcfg)
    ACCOUNTANT.reset_peak()
    for _ in range(steps):
        trainer.train_step(batch)
    return ACCOUNTANT.peak_bytes


def measure_throughput(bundle, steps: int = 1000, batch_size: int = 2,
                       warmup: int = 10, chunks: int = 10,
                       tcfg: Optional[TrainConfig] = None) -> ThroughputResult:
    """Mean training steps per second over ``steps`` timed iterations.

    At least ``warmup`` untimed steps run first; the standard deviation is
    computed over per-chunk rates of the timed window.
    """
    warmup = max(10, warmup)
    tcfg = tcfg or TrainConfig(batch_size=batch_size)
    batch = _synthetic_batch(bundle.cfg, batch_size, seed=tcfg.seed)
    trainer = Trainer(bundle, tcfg)
    for _ in range(warmup):
        trainer.train_step(batch)
    marks = np.empty(steps + 1, dtype=np.float64)
    marks[0] = time.perf_counter()
    for i in range(steps):
        trainer.train_step(batch)
        marks[i + 1] = time.perf_counter()
    total = marks[-1] - marks[0]
    k = max(1, steps // chunks)
    rates = []
    for i in range(0, steps, k):
        j = min(i + k, steps)
        span = marks[j] - marks[i]
        if span > 0:
            rates.append((j - i) / span)
    rates = np.asarray(rates)
    return ThroughputResult(iters_per_sec=float(steps / total),
                            std=float(rates.std()),
                            steps=steps, seconds=float(total))
