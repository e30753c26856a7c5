"""Alternating adversarial training over sub-volume slabs.

Each step applies four isolated updates in a fixed order: voxel critic D,
embedding critic (CRF head, or the low-resolution critic in the baseline
variant), the generator pair G1+G2 (plus the low-resolution decoder in the
baseline), and finally the half-encoder on its reconstruction loss. Every
sub-step zeroes all gradients first and frees its graph afterwards, so the
byte accountant sees the true per-phase peak.
"""

from __future__ import annotations

import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..errors import ConfigError, NonFiniteError, NumericalError, ShapeError
from ..models.bundle import BaselineBundle, CrfganBundle, sample_latent
from ..tensor import ACCOUNTANT, Adam, no_grad, ops
from ..tensor.core import Parameter, Tensor


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters; the four learning rates follow the
    G / D / embedding-critic / half-encoder grouping."""

    batch_size: int = 2
    steps: int = 1000
    seed: int = 0
    lr_g: float = 1e-4
    lr_d: float = 4e-4
    lr_crf: float = 1e-4
    lr_he: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    non_saturating: bool = False

    def __post_init__(self):
        for name in ("lr_g", "lr_d", "lr_crf", "lr_he"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")

    def to_dict(self) -> dict:
        return {"batch_size": self.batch_size, "steps": self.steps,
                "seed": self.seed, "lr_g": self.lr_g, "lr_d": self.lr_d,
                "lr_crf": self.lr_crf, "lr_he": self.lr_he,
                "beta1": self.beta1, "beta2": self.beta2,
                "non_saturating": self.non_saturating}


@dataclass(frozen=True)
class LossBreakdown:
    """Per-step objective values; ``l_total`` is the fixed-order sum
    ``(l_gan + l_crf) + l_reconstruction``.

    ``l_gan`` is the voxel critic's loss (real + fake terms), ``l_crf`` the
    embedding critic's; the baseline variant reports its auxiliary
    low-resolution critic in the ``l_crf`` slot so both variants share one
    record shape. ``terms`` carries the individual summands for diagnostics.
    """

    l_gan: float
    l_crf: float
    l_reconstruction: float
    l_total: float
    terms: Dict[str, float] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def build(cls, l_gan: float, l_crf: float, l_rec: float,
              **terms: float) -> "LossBreakdown":
        return cls(l_gan, l_crf, l_rec, (l_gan + l_crf) + l_rec, dict(terms))

    def to_dict(self) -> dict:
        return {"l_gan": self.l_gan, "l_crf": self.l_crf,
                "l_reconstruction": self.l_reconstruction,
                "l_total": self.l_total}


@dataclass
class RunMetrics:
    """Aggregates one training run: payload-byte peak, step rate, history."""

    steps: int
    peak_bytes: int
    iters_per_sec: float
    iters_std: float
    history: List[LossBreakdown]


@contextmanager
def _frozen(params: Iterable[Parameter]):
    """Exclude parameters from gradient computation inside the block."""
    ps = list(params)
    prev = [p.requires_grad for p in ps]
    for p in ps:
        p.requires_grad = False
    try:
        yield
    finally:
        for p, f in zip(ps, prev):
            p.requires_grad = f


def _avg_pool(x: np.ndarray, factor: int) -> np.ndarray:
    """Block-mean downsample of [N,C,D,H,W] by an integer factor."""
    n, c, d, h, w = x.shape
    if d % factor or h % factor or w % factor:
        raise ShapeError(f"spatial dims {x.shape[2:]} not divisible by {factor}")
    r = x.reshape(n, c, d // factor, factor, h // factor, factor, w // factor, factor)
    return r.mean(axis=(3, 5, 7))


class Trainer:
    """Owns the optimizers and the per-step update schedule for a bundle."""

    def __init__(self, bundle, tcfg: TrainConfig):
        self.bundle = bundle
        self.cfg = bundle.cfg
        self.tcfg = tcfg
        self.rng = np.random.default_rng(tcfg.seed)
        self.dtype = np.float32 if self.cfg.precision == "float32" else np.float64
        lrs = {"G": tcfg.lr_g, "D": tcfg.lr_d, "CRF": tcfg.lr_crf,
               "Dlow": tcfg.lr_d, "hE": tcfg.lr_he}
        betas = (tcfg.beta1, tcfg.beta2)
        self.optimizers: Dict[str, Adam] = {
            name: Adam(params, lr=lrs[name], betas=betas)
            for name, params in bundle.groups().items()}
        self.history: List[LossBreakdown] = []
        self.step_count = 0

    # -- plumbing --------------------------------------------------------------

    def _zero_all(self) -> None:
        for opt in self.optimizers.values():
            opt.zero_grad()

    def _grad_report(self) -> str:
        parts = []
        for name, params in self.bundle.nets().items():
            sq = 0.0
            for p in params:
                if p.grad is not None:
                    v = float(np.linalg.norm(p.grad))
                    sq += v * v
            parts.append(f"{name} grad_norm={math.sqrt(sq):.6g}")
        return ", ".join(parts)

    def _guard(self, phase: str, fn):
        try:
            return fn()
        except (NonFiniteError, NumericalError) as exc:
            raise NumericalError(
                f"step {self.step_count} aborted during {phase} update: {exc} "
                f"[{self._grad_report()}]") from exc

    def _latent(self, n: int) -> Tensor:
        return sample_latent(self.rng, n, self.cfg)

    def _fake_voxel_slab(self, n: int, r: int) -> Tensor:
        """Generated voxel slab for critic updates; built graph-free."""
        with no_grad():
            emb = self.bundle.g1.forward(self._latent(n))
            es = ops.slice_axis(emb, 2, r, r + self.cfg.slab_extent)
            return self.bundle.g2.forward(es)

    # -- sub-steps ---------------------------------------------------------------

    def _step_d(self, x_slab: Tensor, n: int, r: int) -> Tuple[float, float]:
        self._zero_all()
        fake = self._fake_voxel_slab(n, r)
        d = self.bundle.d
        l_real = ops.bce_with_logits(d.forward(x_slab), 1.0)
        l_fake = ops.bce_with_logits(d.forward(fake), 0.0)
        loss = ops.add(l_real, l_fake)
        loss.backward()
        self.optimizers["D"].step()
        vals = (l_real.item(), l_fake.item())
        loss.free_graph()
        return vals

    def _step_crf(self, x_slab: Tensor, n: int, r: int) -> Tuple[float, float]:
        self._zero_all()
        with no_grad():
            e_real = self.bundle.he.forward(x_slab)
            emb = self.bundle.g1.forward(self._latent(n))
            e_fake = ops.slice_axis(emb, 2, r, r + self.cfg.slab_extent)
        crf = self.bundle.crf
        l_real = ops.bce_with_logits(crf.logit(e_real), 1.0)
        l_fake = ops.bce_with_logits(crf.logit(e_fake), 0.0)
        loss = ops.add(l_real, l_fake)
        loss.backward()
        self.optimizers["CRF"].step()
        vals = (l_real.item(), l_fake.item())
        loss.free_graph()
        return vals

    def _step_dlow(self, x: np.ndarray, n: int) -> Tuple[float, float]:
        self._zero_all()
        low_real = Tensor(np.ascontiguousarray(
            _avg_pool(x, self.cfg.upsample), dtype=self.dtype))
        with no_grad():
            emb = self.bundle.g1.forward(self._latent(n))
            low_fake = self.bundle.g_low.forward(emb)
        dl = self.bundle.d_low
        l_real = ops.bce_with_logits(dl.forward(low_real), 1.0)
        l_fake = ops.bce_with_logits(dl.forward(low_fake), 0.0)
        loss = ops.add(l_real, l_fake)
        loss.backward()
        self.optimizers["Dlow"].step()
        vals = (l_real.item(), l_fake.item())
        loss.free_graph()
        return vals

    def _gen_objective(self, logit: Tensor) -> Tensor:
        """Generator-side objective on a critic logit (mean over batch)."""
        if self.tcfg.non_saturating:
            return ops.bce_with_logits(logit, 1.0)
        # original minimax form: minimize log(1 - sigmoid(logit))
        return ops.neg(ops.mean(ops.softplus(logit)))

    def _step_g(self, n: int, r: int) -> Tuple[float, float]:
        self._zero_all()
        b = self.bundle
        critics = b.d.parameters() + (
            b.crf.parameters() if isinstance(b, CrfganBundle)
            else b.d_low.parameters())
        with _frozen(critics):
            emb = b.g1.forward(self._latent(n))
            es = ops.slice_axis(emb, 2, r, r + self.cfg.slab_extent)
            y = b.g2.forward(es)
            l_adv = self._gen_objective(b.d.forward(y))
            if isinstance(b, CrfganBundle):
                l_aux = self._gen_objective(b.crf.logit(es))
            else:
                low = b.g_low.forward(emb)
                l_aux = self._gen_objective(b.d_low.forward(low))
            loss = ops.add(l_adv, l_aux)
            loss.backward()
        self.optimizers["G"].step()
        vals = (l_adv.item(), l_aux.item())
        loss.free_graph()
        return vals

    def _step_he(self, x_slab: Tensor) -> float:
        self._zero_all()
        b = self.bundle
        with _frozen(b.g2.parameters()):
            e = b.he.forward(x_slab)
            recon = b.g2.forward(e)
            loss = ops.l1_loss(recon, x_slab)
            loss.backward()
        self.optimizers["hE"].step()
        val = loss.item()
        loss.free_graph()
        return val

    # -- public API --------------------------------------------------------------

    def train_step(self, real_batch: np.ndarray) -> LossBreakdown:
        """One alternating update on a preprocessed [N,1,R,R,R] batch."""
        cfg = self.cfg
        x = np.ascontiguousarray(real_batch, dtype=self.dtype)
        if x.ndim != 5 or x.shape[1] != 1 or x.shape[2:] != (cfg.resolution,) * 3:
            raise ShapeError(
                f"expected batch [N,1,{cfg.resolution},{cfg.resolution},"
                f"{cfg.resolution}], got {x.shape}")
        n = x.shape[0]
        r = int(self.rng.integers(0, cfg.emb_size - cfg.slab_extent + 1))
        u = cfg.upsample
        x_slab = Tensor(np.ascontiguousarray(x[:, :, r * u:(r + cfg.slab_extent) * u]))

        d_real, d_fake = self._guard("D", lambda: self._step_d(x_slab, n, r))
        if isinstance(self.bundle, BaselineBundle):
            aux_real, aux_fake = self._guard(
                "Dlow", lambda: self._step_dlow(x, n))
        else:
            aux_real, aux_fake = self._guard(
                "CRF", lambda: self._step_crf(x_slab, n, r))
        g_adv, g_aux = self._guard("G", lambda: self._step_g(n, r))
        l_rec = self._guard("hE", lambda: self._step_he(x_slab))

        out = LossBreakdown.build(
            d_real + d_fake, aux_real + aux_fake, l_rec,
            d_real=d_real, d_fake=d_fake, critic_emb_real=aux_real,
            critic_emb_fake=aux_fake, g_adv=g_adv, g_aux=g_aux)
        self.history.append(out)
        self.step_count += 1
        return out

    def sample_batch(self, data: np.ndarray) -> np.ndarray:
        """Draw a batch (with replacement) from [M,1,R,R,R] training data."""
        idx = self.rng.integers(0, data.shape[0], size=self.tcfg.batch_size)
        return data[idx]

    def fit(self, data: np.ndarray, steps: Optional[int] = None,
            log_fn=None) -> RunMetrics:
        """Run ``steps`` updates sampling batches from ``data``."""
        steps = self.tcfg.steps if steps is None else steps
        ACCOUNTANT.reset_peak()
        times: List[float] = []
        t0 = time.perf_counter()
        for i in range(steps):
            bd = self.train_step(self.sample_batch(data))
            t1 = time.perf_counter()
            times.append(t1 - t0)
            t0 = t1
            if log_fn is not None and (i + 1) % max(1, steps // 20) == 0:
                log_fn(self.step_count, bd)
        rates = _chunk_rates(times)
        return RunMetrics(steps=steps, peak_bytes=ACCOUNTANT.peak_bytes,
                          iters_per_sec=float(np.mean(rates)),
                          iters_std=float(np.std(rates)),
                          history=list(self.history[-steps:]))


def _chunk_rates(times: List[float], chunks: int = 10) -> np.ndarray:
    """Per-chunk step rates from a list of per-step durations."""
    arr = np.asarray(times, dtype=np.float64)
    if arr.size == 0:
        return np.zeros(1)
    k = max(1, arr.size // chunks)
    groups = [arr[i:i + k] for i in range(0, arr.size, k)]
    return np.asarray([g.size / g.sum() for g in groups if g.sum() > 0])


def train_step(trainer: Trainer, real_batch: np.ndarray) -> LossBreakdown:
    """Functional alias for :meth:`Trainer.train_step`."""
    return trainer.train_step(real_batch)
