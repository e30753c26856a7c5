"""Shared fixtures and the finite-difference gradient checker."""

import numpy as np
import pytest

from crfgan.tensor import Tensor, ops


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def fd_gradients(fn, arrays, eps=1e-6):
    """Central-difference gradients of a scalar-valued array function."""
    grads = []
    for i, a in enumerate(arrays):
        g = np.zeros_like(a, dtype=np.float64)
        flat = a.reshape(-1)
        gf = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            fp = fn(arrays)
            flat[j] = orig - eps
            fm = fn(arrays)
            flat[j] = orig
            gf[j] = (fp - fm) / (2.0 * eps)
        grads.append(g)
    return grads


def _tape_and_fd_gradients(build, arrays, seed=0, eps=1e-6):
    """Tape and central-FD gradients of ``build`` under a fixed cotangent.

    ``build`` maps float64 Tensors to one output Tensor of any shape; the
    output is projected onto a fixed random cotangent so a single scalar
    backward exercises the full Jacobian.
    """
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
    probe = build(*[Tensor(a.copy()) for a in arrays])
    cot = np.random.default_rng(seed + 17).standard_normal(probe.shape)

    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    out = build(*tensors)
    loss = ops.sum_(ops.mul(out, Tensor(cot)))
    loss.backward()
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(a)
                for t, a in zip(tensors, arrays)]

    def scalar(arrs):
        y = build(*[Tensor(a) for a in arrs])
        return float((y.numpy() * cot).sum())

    numeric = fd_gradients(scalar, [a.copy() for a in arrays], eps=eps)
    return analytic, numeric


def gradient_errors(build, arrays, seed=0, eps=1e-6):
    """Per-input normalized gradient errors: max|tape-FD| / max(max|FD|, 1)."""
    analytic, numeric = _tape_and_fd_gradients(build, arrays, seed, eps)
    errs = []
    for a, n in zip(analytic, numeric):
        ref = max(float(np.max(np.abs(n))) if n.size else 0.0, 1.0)
        errs.append(float(np.max(np.abs(a - n))) / ref if n.size else 0.0)
    return errs


def check_gradients(build, arrays, seed=0, rtol=1e-4, atol=1e-7, eps=1e-6):
    """Assert tape gradients of ``build(*tensors)`` match central FD."""
    analytic, numeric = _tape_and_fd_gradients(build, arrays, seed, eps)
    for k, (a, n) in enumerate(zip(analytic, numeric)):
        err = np.max(np.abs(a - n))
        ref = max(np.max(np.abs(n)), 1.0)
        assert err <= rtol * ref + atol, (
            f"input {k}: max |analytic-numeric| = {err:.3e} "
            f"(scale {ref:.3e}), rtol {rtol}")
    return analytic


def away_from(x, value=0.0, margin=0.05):
    """Push entries of ``x`` at least ``margin`` away from ``value``."""
    x = np.asarray(x, dtype=np.float64).copy()
    d = x - value
    close = np.abs(d) < margin
    x[close] = value + margin * np.where(d[close] < 0, -1.0, 1.0)
    return x


_GATES = {}


def record_gate(num, name, ok, detail):
    """Register one acceptance gate's verdict for the terminal summary."""
    _GATES[num] = (name, bool(ok), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _GATES:
        return
    terminalreporter.section("acceptance gates")
    for num in sorted(_GATES):
        name, ok, detail = _GATES[num]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{num:02d}] {verdict} {name}: {detail}")


@pytest.fixture(scope="session")
def tiny_cfg():
    """A minimal architecture for fast model/training tests."""
    from crfgan.models.config import ArchConfig

    return ArchConfig(
        name="tiny16",
        resolution=16,
        latent_dim=8,
        emb_channels=4,
        emb_size=4,
        slab_extent=1,
        g1_base=8,
        g1_channels=(),
        g2_channels=(6, 4, 4),
        d_channels=(4, 8),
        he_channels=(4, 6, 8),
        crf_hidden=8,
        crf_patch=(1, 2, 2),
        crf_lambda=1.0,
        low_g_channels=(6, 8),
        low_d_channels=(4, 8, 8),
        gn_groups=2,
    )
