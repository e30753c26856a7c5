"""Conv kernel contracts: backend equivalence, adjointness, shape math."""

import numpy as np
import pytest

from crfgan.errors import ShapeError
from crfgan.tensor import kernels
from crfgan.tensor.kernels import numpy_backend


def _case(seed, stride, pad, dtype=np.float64):
    g = np.random.default_rng(seed)
    x = g.standard_normal((2, 3, 6, 5, 7)).astype(dtype)
    w = g.standard_normal((4, 3, 3, 3, 3)).astype(dtype)
    return x, w, stride, pad


def test_backend_name_is_declared():
    assert kernels.backend_name() in ("numpy", "compiled")


@pytest.mark.parametrize("seed,stride,pad",
                         [(0, 1, 0), (1, 1, 1), (2, 2, 1), (3, 2, 0),
                          (4, (1, 2, 1), (0, 1, 1))])
def test_dispatch_matches_numpy_backend(seed, stride, pad):
    """Whatever backend is active must agree with the pure-numpy one."""
    x, w, stride, pad = _case(seed, stride, pad)
    y = kernels.conv3d_forward(x, w, stride, pad)

    st = kernels._triple(stride)
    pd = kernels._triple(pad)
    xp = kernels._pad_input(x, pd)
    out_spatial = y.shape[2:]
    y_ref = numpy_backend.conv3d_forward(xp, w, st, out_spatial)
    np.testing.assert_allclose(y, y_ref, rtol=1e-12, atol=1e-12)

    gy = np.random.default_rng(seed + 9).standard_normal(y.shape)
    gx = kernels.conv3d_grad_input(gy, w, stride, pad, x.shape[2:])
    padded = tuple(x.shape[2 + i] + 2 * pd[i] for i in range(3))
    gx_ref = numpy_backend.conv3d_grad_input(gy, w, st, padded)
    a, b, c = pd
    gx_ref = gx_ref[:, :, a:a + x.shape[2], b:b + x.shape[3], c:c + x.shape[4]]
    np.testing.assert_allclose(gx, gx_ref, rtol=1e-12, atol=1e-12)

    gw = kernels.conv3d_grad_weight(x, gy, stride, pad, w.shape[2:])
    gw_ref = numpy_backend.conv3d_grad_weight(xp, gy, st, tuple(w.shape[2:]))
    np.testing.assert_allclose(gw, gw_ref, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("seed,stride,pad", [(0, 1, 0), (1, 2, 1), (2, 2, 0)])
def test_conv_adjoint_identity(seed, stride, pad):
    """<conv(x), u> == <x, adjoint(u)> to near machine precision."""
    x, w, stride, pad = _case(seed, stride, pad)
    y = kernels.conv3d_forward(x, w, stride, pad)
    g = np.random.default_rng(seed + 5)
    u = g.standard_normal(y.shape)
    xt = kernels.conv3d_grad_input(u, w, stride, pad, x.shape[2:])
    assert xt.shape == x.shape
    lhs = float(np.vdot(y, u))
    rhs = float(np.vdot(x, xt))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@pytest.mark.parametrize("seed", range(2))
def test_transpose_matches_adjoint_on_invertible_shapes(seed):
    """Where shapes invert exactly, conv_transpose IS the conv adjoint."""
    g = np.random.default_rng(seed)
    x = g.standard_normal((2, 3, 7, 5, 9))   # odd sizes: (n+2p-k)%s == 0
    w = g.standard_normal((4, 3, 3, 3, 3))
    y = kernels.conv3d_forward(x, w, 2, 1)
    u = np.random.default_rng(seed + 5).standard_normal(y.shape)
    xt = kernels.conv_transpose3d_forward(u, w, 2, 1)
    assert xt.shape == x.shape
    assert abs(np.vdot(y, u) - np.vdot(x, xt)) <= 1e-10 * max(
        1.0, abs(float(np.vdot(y, u))))


def test_float32_path_supported():
    x, w, stride, pad = _case(7, 1, 1, dtype=np.float32)
    y = kernels.conv3d_forward(x, w, stride, pad)
    assert y.dtype == np.float32
    y64 = kernels.conv3d_forward(x.astype(np.float64), w.astype(np.float64),
                                 stride, pad)
    np.testing.assert_allclose(y, y64, rtol=2e-5, atol=2e-5)


def test_conv_out_size_formula():
    assert kernels.conv_out_size(5, 3, 1, 0) == 3
    assert kernels.conv_out_size(5, 3, 1, 1) == 5
    assert kernels.conv_out_size(6, 4, 2, 1) == 3
    assert kernels.conv_out_size(4, 4, 2, 1) == 2


def test_shape_validation():
    g = np.random.default_rng(0)
    with pytest.raises(ShapeError):
        kernels.conv3d_forward(g.standard_normal((2, 3, 4, 4)),
                               g.standard_normal((4, 3, 3, 3, 3)), 1, 0)
    with pytest.raises(ShapeError):
        kernels.conv3d_forward(g.standard_normal((2, 3, 4, 4, 4)),
                               g.standard_normal((4, 2, 3, 3, 3)), 1, 0)
    with pytest.raises(ShapeError):   # kernel larger than padded input
        kernels.conv3d_forward(g.standard_normal((1, 1, 2, 2, 2)),
                               g.standard_normal((1, 1, 3, 3, 3)), 1, 0)


def test_benchmark_harness_runs():
    from crfgan.tensor.kernels import bench

    rows = bench.run(reps=1)
    assert rows, "benchmark produced no rows"
    for row in rows:
        assert np.isfinite(row["numpy_ms"]) and row["numpy_ms"] > 0
        if kernels.backend_name() == "compiled":
            assert np.isfinite(row["compiled_ms"]) and row["compiled_ms"] > 0
