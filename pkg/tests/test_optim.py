"""Adam against a hand-computed reference, plus state round-trips."""

import numpy as np
import pytest

from crfgan.errors import ConfigError, NumericalError
from crfgan.tensor import Adam, Parameter


def _adam_reference(x0, grads, lr, b1, b2, eps):
    """Textbook bias-corrected Adam trace."""
    x = x0.astype(np.float64).copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1 ** t)
        vhat = v / (1 - b2 ** t)
        x = x - lr * mhat / (np.sqrt(vhat) + eps)
    return x


def test_adam_matches_hand_computation(rng):
    x0 = rng.standard_normal(6)
    grads = [rng.standard_normal(6) for _ in range(5)]
    lr, b1, b2, eps = 1e-2, 0.9, 0.999, 1e-8

    p = Parameter(x0.copy(), name="p")
    opt = Adam([p], lr=lr, betas=(b1, b2), eps=eps)
    for g in grads:
        p.grad = g.copy()
        opt.step()
    expected = _adam_reference(x0, grads, lr, b1, b2, eps)
    np.testing.assert_allclose(p.data, expected, rtol=1e-12, atol=1e-14)


def test_params_without_grads_are_skipped(rng):
    a = Parameter(rng.standard_normal(3), name="a")
    b = Parameter(rng.standard_normal(3), name="b")
    before = b.data.copy()
    opt = Adam([a, b], lr=1e-2)
    a.grad = np.ones(3, dtype=a.data.dtype)
    opt.step()
    np.testing.assert_array_equal(b.data, before)
    assert not np.array_equal(a.data, a.data * 0)


def test_nonfinite_grad_rejects_whole_step(rng):
    a = Parameter(rng.standard_normal(3), name="a")
    b = Parameter(rng.standard_normal(3), name="b")
    snap_a, snap_b = a.data.copy(), b.data.copy()
    opt = Adam([a, b], lr=1e-2)
    a.grad = np.ones(3, dtype=a.data.dtype)
    b.grad = np.array([1.0, np.nan, 0.0], dtype=b.data.dtype)
    with pytest.raises(NumericalError):
        opt.step()
    np.testing.assert_array_equal(a.data, snap_a)   # nothing moved
    np.testing.assert_array_equal(b.data, snap_b)
    assert opt.t == 0


def test_state_round_trip_resumes_identically(rng):
    x0 = rng.standard_normal(4)
    grads = [rng.standard_normal(4) for _ in range(6)]

    p1 = Parameter(x0.copy(), name="w")
    o1 = Adam([p1], lr=3e-3)
    for g in grads:
        p1.grad = g.copy()
        o1.step()

    p2 = Parameter(x0.copy(), name="w")
    o2 = Adam([p2], lr=3e-3)
    for g in grads[:3]:
        p2.grad = g.copy()
        o2.step()
    saved = {k: v.copy() for k, v in o2.state_arrays().items()}
    p2b = Parameter(p2.data.copy(), name="w")
    o3 = Adam([p2b], lr=3e-3)
    o3.load_state_arrays(saved)
    for g in grads[3:]:
        p2b.grad = g.copy()
        o3.step()
    np.testing.assert_array_equal(p2b.data, p1.data)


def test_invalid_lr_rejected(rng):
    with pytest.raises(ConfigError):
        Adam([Parameter(rng.standard_normal(2), name="x")], lr=0.0)


def test_zero_grad_clears(rng):
    p = Parameter(rng.standard_normal(3), name="p")
    opt = Adam([p], lr=1e-3)
    p.grad = np.ones(3, dtype=p.data.dtype)
    opt.zero_grad()
    assert p.grad is None or not np.any(p.grad)
