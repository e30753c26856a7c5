"""Finite-difference gradient checks for every differentiable op.

Each check projects the op output onto a random cotangent and compares
the tape gradient with 64-bit central differences. Non-smooth ops get
inputs nudged away from their kinks first.
"""

import numpy as np
import pytest

from crfgan.tensor import Tensor, ops
from crfgan.tensor.ops import SpectralState

from conftest import away_from, check_gradients


def r(seed, *shape):
    return np.random.default_rng(seed).standard_normal(shape)


@pytest.mark.parametrize("seed", range(3))
def test_elementwise_binary(seed):
    a, b = r(seed, 4, 5), r(seed + 100, 4, 5)
    check_gradients(ops.add, [a, b], seed)
    check_gradients(ops.sub, [a, b], seed)
    check_gradients(ops.mul, [a, b], seed)
    check_gradients(ops.div, [a, away_from(b, 0.0, 0.3)], seed)


@pytest.mark.parametrize("seed", range(3))
def test_broadcasting_binary(seed):
    a = r(seed, 4, 5)
    b = r(seed + 100, 1, 5)
    check_gradients(ops.add, [a, b], seed)
    check_gradients(ops.mul, [a, b], seed)
    c = r(seed + 200, 4, 1)
    check_gradients(ops.sub, [a, c], seed)


@pytest.mark.parametrize("seed", range(3))
def test_elementwise_unary(seed):
    a = r(seed, 3, 7)
    check_gradients(ops.neg, [a], seed)
    check_gradients(lambda t: ops.scale(t, -2.5), [a], seed)
    check_gradients(lambda t: ops.add_scalar(t, 1.25), [a], seed)
    check_gradients(ops.square, [a], seed)
    check_gradients(ops.sqrt, [np.abs(a) + 0.5], seed)
    check_gradients(ops.absolute, [away_from(a)], seed)
    check_gradients(ops.tanh, [a], seed)
    check_gradients(ops.sigmoid, [a], seed)
    check_gradients(ops.softplus, [a], seed)
    check_gradients(ops.relu, [away_from(a)], seed)
    check_gradients(lambda t: ops.leaky_relu(t, 0.2), [away_from(a)], seed)


@pytest.mark.parametrize("seed", range(3))
def test_shape_ops(seed):
    a = r(seed, 2, 3, 4)
    check_gradients(lambda t: ops.reshape(t, (6, 4)), [a], seed)
    check_gradients(lambda t: ops.slice_axis(t, 1, 1, 3), [a], seed)
    check_gradients(lambda t: ops.slice_axis(t, 2, 0, 2), [a], seed)


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("axis,keepdims", [(None, False), (0, False),
                                           ((1, 2), True)])
def test_reductions(seed, axis, keepdims):
    a = r(seed, 3, 4, 5)
    check_gradients(lambda t: ops.sum_(t, axis=axis, keepdims=keepdims),
                    [a], seed)
    check_gradients(lambda t: ops.mean(t, axis=axis, keepdims=keepdims),
                    [a], seed)


@pytest.mark.parametrize("seed", range(3))
def test_matmul_and_linear(seed):
    a, b = r(seed, 4, 6), r(seed + 1, 6, 3)
    check_gradients(ops.matmul, [a, b], seed)
    x, w, bias = r(seed, 5, 6), r(seed + 1, 6, 2), r(seed + 2, 2)
    check_gradients(ops.linear, [x, w, bias], seed)
    check_gradients(lambda xx, ww: ops.linear(xx, ww), [x, w], seed)


@pytest.mark.parametrize("seed,stride,pad", [(0, 1, 0), (1, 1, 1),
                                             (2, 2, 1), (3, 2, 0)])
def test_conv3d_gradients(seed, stride, pad):
    x = r(seed, 2, 2, 5, 5, 5)
    w = r(seed + 50, 3, 2, 3, 3, 3)
    b = r(seed + 90, 3)
    check_gradients(
        lambda xx, ww, bb: ops.conv3d(xx, ww, bb, stride=stride, padding=pad),
        [x, w, b], seed)


@pytest.mark.parametrize("seed,stride,pad", [(0, 1, 0), (1, 2, 1), (2, 2, 0)])
def test_conv_transpose3d_gradients(seed, stride, pad):
    x = r(seed, 2, 3, 3, 3, 3)
    w = r(seed + 50, 3, 2, 4, 4, 4) if stride == 2 else r(seed + 50, 3, 2, 3, 3, 3)
    b = r(seed + 90, 2)
    check_gradients(
        lambda xx, ww, bb: ops.conv_transpose3d(xx, ww, bb, stride=stride,
                                                padding=pad),
        [x, w, b], seed)


@pytest.mark.parametrize("seed", range(3))
def test_batch_norm_training_gradients(seed):
    x = r(seed, 3, 2, 3, 3, 3)
    gamma = np.abs(r(seed + 1, 2)) + 0.5
    beta = r(seed + 2, 2)

    def build(xx, gg, bb):
        rm = np.zeros(2)
        rv = np.ones(2)
        return ops.batch_norm3d(xx, gg, bb, rm, rv, training=True)

    check_gradients(build, [x, gamma, beta], seed)


@pytest.mark.parametrize("seed", range(3))
def test_batch_norm_eval_gradients(seed):
    x = r(seed, 2, 2, 3, 3, 3)
    gamma = np.abs(r(seed + 1, 2)) + 0.5
    beta = r(seed + 2, 2)
    rm = r(seed + 3, 2) * 0.1
    rv = np.abs(r(seed + 4, 2)) + 0.5

    def build(xx, gg, bb):
        return ops.batch_norm3d(xx, gg, bb, rm.copy(), rv.copy(),
                                training=False)

    check_gradients(build, [x, gamma, beta], seed)


@pytest.mark.parametrize("seed", range(3))
def test_group_norm_gradients(seed):
    x = r(seed, 2, 4, 3, 3, 3)
    gamma = np.abs(r(seed + 1, 4)) + 0.5
    beta = r(seed + 2, 4)
    check_gradients(lambda xx, gg, bb: ops.group_norm(xx, 2, gg, bb),
                    [x, gamma, beta], seed)


@pytest.mark.parametrize("seed", range(3))
def test_spectral_normalize_gradients(seed):
    w = r(seed, 4, 6)
    state = SpectralState.init(4, 6, np.random.default_rng(seed + 7),
                               dtype=np.float64)
    for _ in range(30):   # converge u,v so frozen-vector grads are exact
        v = w.T @ state.u
        state.v = v / np.linalg.norm(v)
        u = w @ state.v
        state.u = u / np.linalg.norm(u)

    def build(ww):
        s = SpectralState(u=state.u.copy(), v=state.v.copy())
        return ops.spectral_normalize(ww, s, power_iters=0)

    check_gradients(build, [w], seed)


@pytest.mark.parametrize("seed", range(3))
def test_loss_gradients(seed):
    a, b = r(seed, 4, 5), r(seed + 1, 4, 5)
    check_gradients(ops.l1_loss, [a, away_from(b - a, 0.0, 0.05) + a], seed)
    logits = r(seed + 2, 6)
    targets = np.random.default_rng(seed + 3).uniform(0.1, 0.9, 6)
    check_gradients(lambda l: ops.bce_with_logits(l, Tensor(targets)),
                    [logits], seed)
    probs = np.random.default_rng(seed + 4).uniform(0.1, 0.9, 6)
    check_gradients(lambda p: ops.bce(p, Tensor(targets)), [probs], seed)


def test_gradcheck_catches_wrong_gradient():
    """The checker itself must fail on a deliberately broken derivative."""
    from crfgan.tensor.core import make_op

    def bad_square(t):
        return make_op("bad_square", t.data ** 2, (t,),
                       lambda g: (3.0 * t.data * g,))   # wrong factor

    with pytest.raises(AssertionError):
        check_gradients(bad_square, [r(0, 4)], 0)
