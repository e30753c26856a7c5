"""Frechet distance between Gaussian feature statistics.

The delicate step is Tr sqrt(Sigma_a Sigma_b). The default route
symmetrizes the product as sqrt(Sa) Sb sqrt(Sa) and reads the trace off
its eigenvalues; a Newton-Schulz iteration provides an independent
cross-check. Both refuse eigenvalues more negative than the PSD noise
floor instead of silently clamping real signal away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateBatchError, NumericalError, ShapeError

EIG_CLAMP_REL = 1e-6


@dataclass(frozen=True)
class FeatureStats:
    mu: np.ndarray        # [F]
    sigma: np.ndarray     # [F, F], symmetric PSD
    n: int

    def __post_init__(self):
        if self.mu.ndim != 1 or self.sigma.shape != (self.mu.size, self.mu.size):
            raise ShapeError(
                f"inconsistent stats: mu {self.mu.shape}, sigma {self.sigma.shape}")


def fit_stats(features: np.ndarray) -> FeatureStats:
    """Mean and unbiased covariance of an [n, F] feature matrix."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2:
        raise ShapeError(f"features must be [n, F], got {f.shape}")
    n = f.shape[0]
    if n < 2:
        raise DegenerateBatchError(f"need >= 2 samples for covariance, got {n}")
    mu = f.mean(axis=0)
    c = f - mu
    sigma = (c.T @ c) / (n - 1)
    sigma = 0.5 * (sigma + sigma.T)
    return FeatureStats(mu=mu, sigma=sigma, n=n)


def _clamped_sqrt_eigvals(m: np.ndarray, what: str) -> np.ndarray:
    vals = np.linalg.eigvalsh(0.5 * (m + m.T))
    top = max(float(vals.max(initial=0.0)), 0.0)
    floor = -EIG_CLAMP_REL * top if top > 0 else -EIG_CLAMP_REL
    bad = vals[vals < floor]
    if bad.size:
        raise NumericalError(
            f"{what} has eigenvalue {bad.min():.3e} below the PSD noise floor "
            f"{floor:.3e}; input statistics are not positive semidefinite")
    # rank-deficient inputs put +/- eigensolver noise where exact zeros
    # belong; the square root amplifies it, so truncate before clamping
    vals[np.abs(vals) < 1e-12 * max(top, 1e-300)] = 0.0
    return np.sqrt(np.clip(vals, 0.0, None))


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition."""
    sym = 0.5 * (m + m.T)
    vals, vecs = np.linalg.eigh(sym)
    top = max(float(vals.max(initial=0.0)), 0.0)
    floor = -EIG_CLAMP_REL * top if top > 0 else -EIG_CLAMP_REL
    bad = vals[vals < floor]
    if bad.size:
        raise NumericalError(
            f"matrix has eigenvalue {bad.min():.3e} below the PSD noise floor "
            f"{floor:.3e}; refusing square root")
    root = np.sqrt(np.clip(vals, 0.0, None))
    return (vecs * root) @ vecs.T


def newton_schulz_sqrt(m: np.ndarray, iters: int = 60,
                       tol: float = 1e-10) -> np.ndarray:
    """Square root of a symmetric PSD matrix by Newton-Schulz iteration.

    Normalized so the iteration contracts; raises with the achieved
    residual when ||Y@Y - M||_F / ||M||_F fails to reach ``tol``.
    """
    a = 0.5 * (m + m.T)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return np.zeros_like(a)
    f = a.shape[0]
    y = a / norm
    z = np.eye(f)
    eye3 = 3.0 * np.eye(f)
    for _ in range(iters):
        t = 0.5 * (eye3 - z @ y)
        y = y @ t
        z = t @ z
    root = y * np.sqrt(norm)
    residual = float(np.linalg.norm(root @ root - a) / norm)
    if not np.isfinite(residual) or residual > tol * max(1.0, np.sqrt(f)) * 1e4:
        raise NumericalError(
            f"Newton-Schulz square root did not converge: relative residual "
            f"{residual:.3e} after {iters} iterations")
    return root


def trace_sqrt_product(sigma_a: np.ndarray, sigma_b: np.ndarray,
                       method: str = "eig") -> float:
    """Tr sqrt(Sigma_a Sigma_b) via the symmetrized product."""
    sa = sqrtm_psd(sigma_a)
    inner = sa @ sigma_b @ sa
    if method == "eig":
        return float(_clamped_sqrt_eigvals(inner, "cross-covariance product").sum())
    if method == "newton-schulz":
        return float(np.trace(newton_schulz_sqrt(inner)))
    raise ValueError(f"unknown method {method!r}")


def fid(a: FeatureStats, b: FeatureStats, method: str = "eig") -> float:
    """Frechet distance between two feature Gaussians."""
    if a.mu.size != b.mu.size:
        raise ShapeError(f"feature dims differ: {a.mu.size} vs {b.mu.size}")
    delta = a.mu - b.mu
    tr_cross = trace_sqrt_product(a.sigma, b.sigma, method=method)
    scale = float(np.trace(a.sigma) + np.trace(b.sigma)) + float(delta @ delta)
    val = float(delta @ delta + np.trace(a.sigma) + np.trace(b.sigma)
                - 2.0 * tr_cross)
    # tiny negatives are roundoff in the trace difference
    if val < -1e-6 * max(scale, 1.0):
        raise NumericalError(f"FID evaluated to {val:.3e} < 0 "
                             f"(beyond roundoff for scale {scale:.3e})")
    return max(val, 0.0)
