"""Layer-level checks: finite-difference gradients for every layer kind,
plus the small closed-form identities each layer should satisfy."""

import numpy as np
import numpy.testing as npt
import pytest

from tiavc.errors import DimensionError
from tiavc.nn.gradcheck import grad_check, projection_loss_fn
from tiavc.nn.layers import (LSTM, AttentionPool, Concat, Conv1D, Dense,
                             MaxPoolTime, ReLU, Sigmoid, Stack, Tanh,
                             TimeDistributedDense, softmax, softmax_vjp)
from tiavc.nn.params import glorot_uniform

TOL = 1e-4
SEEDS = (0, 1, 2, 3, 4)

F64 = np.float64


def _rng(seed):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------- gradients

@pytest.mark.parametrize("seed", SEEDS)
def test_dense_gradients(seed):
    rng = _rng(seed)
    layer = Dense(7, 5, rng, dtype=F64)
    x = rng.standard_normal((4, 7))
    fn = projection_loss_fn(layer.forward, layer.backward, layer.params(), x, seed)
    assert grad_check(fn, layer.params()) < TOL


@pytest.mark.parametrize("seed", SEEDS)
def test_time_distributed_dense_gradients(seed):
    rng = _rng(seed)
    layer = TimeDistributedDense(6, 4, rng, dtype=F64)
    x = rng.standard_normal((3, 5, 6))
    fn = projection_loss_fn(layer.forward, layer.backward, layer.params(), x, seed)
    assert grad_check(fn, layer.params()) < TOL


@pytest.mark.parametrize("seed", SEEDS)
def test_lstm_gradients(seed):
    rng = _rng(seed)
    layer = LSTM(5, 4, rng, dtype=F64)
    x = rng.standard_normal((3, 6, 5))
    fn = projection_loss_fn(layer.forward, layer.backward, layer.params(), x, seed)
    assert grad_check(fn, layer.params()) < TOL


@pytest.mark.parametrize("seed", SEEDS)
def test_attention_pool_gradients(seed):
    rng = _rng(seed)
    layer = AttentionPool(5, rng, dtype=F64)
    x = rng.standard_normal((3, 7, 5))
    # forward returns (pooled, weights); the check drives the pooled output
    fn = projection_loss_fn(lambda h: layer.forward(h)[0], layer.backward,
                            layer.params(), x, seed)
    assert grad_check(fn, layer.params()) < TOL


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("kernel", (1, 3))
def test_conv1d_gradients(seed, kernel):
    rng = _rng(seed)
    layer = Conv1D(4, 6, kernel, rng, dtype=F64)
    x = rng.standard_normal((3, 5, 4))
    fn = projection_loss_fn(layer.forward, layer.backward, layer.params(), x, seed)
    assert grad_check(fn, layer.params()) < TOL


@pytest.mark.parametrize("seed", SEEDS)
def test_stack_with_activations_and_pool_gradients(seed):
    # relu/tanh/sigmoid/maxpool have no parameters of their own; they are
    # exercised by routing gradient through them between dense layers
    rng = _rng(seed)
    stack = Stack([
        TimeDistributedDense(5, 6, rng, dtype=F64),
        Tanh(),
        Conv1D(6, 6, 3, rng, dtype=F64),
        ReLU(),
        MaxPoolTime(),
        Dense(6, 4, rng, dtype=F64),
        Sigmoid(),
    ])
    x = _rng(seed + 100).standard_normal((4, 6, 5))
    fn = projection_loss_fn(stack.forward, stack.backward, stack.params(), x, seed)
    assert grad_check(fn, stack.params()) < TOL


# ----------------------------------------------------------- exact identities

def test_relu_tanh_sigmoid_values():
    x = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    npt.assert_array_equal(ReLU().forward(x), [0.0, 0.0, 0.0, 0.5, 2.0])
    npt.assert_allclose(Tanh().forward(x), np.tanh(x), rtol=0, atol=0)
    npt.assert_allclose(Sigmoid().forward(x), 1.0 / (1.0 + np.exp(-x)),
                        rtol=1e-15, atol=0)


def test_zero_lstm_is_a_fixed_point():
    # with all weights and biases zero: gates are 1/2, candidate is tanh(0)=0,
    # so the cell and hidden state stay exactly zero for any input
    rng = _rng(0)
    layer = LSTM(4, 3, rng, dtype=F64)
    for p in layer.params():
        p.value[:] = 0.0
    out = layer.forward(rng.standard_normal((2, 9, 4)))
    npt.assert_array_equal(out, np.zeros((2, 9, 3)))


def test_lstm_single_step_matches_direct_formula():
    rng = _rng(3)
    layer = LSTM(4, 3, rng, dtype=F64)
    x = rng.standard_normal((2, 1, 4))
    out = layer.forward(x)

    def sig(v):
        return 1.0 / (1.0 + np.exp(-v))

    x0 = x[:, 0, :]
    gi = sig(x0 @ layer.w_x["in_gate"].value + layer.b["in_gate"].value)
    gf = sig(x0 @ layer.w_x["forget_gate"].value + layer.b["forget_gate"].value)
    go = sig(x0 @ layer.w_x["out_gate"].value + layer.b["out_gate"].value)
    gc = np.tanh(x0 @ layer.w_x["cell_cand"].value + layer.b["cell_cand"].value)
    h1 = go * np.tanh(gi * gc)   # c0 = 0 so the forget path drops out
    npt.assert_allclose(out[:, 0, :], h1, rtol=1e-12, atol=1e-15)


def test_conv1d_kernel1_equals_time_distributed_dense():
    rng = _rng(1)
    conv = Conv1D(5, 4, 1, rng, dtype=F64)
    tdd = TimeDistributedDense(5, 4, _rng(2), dtype=F64)
    tdd.weight.value[:] = conv.weight.value[0]
    tdd.bias.value[:] = conv.bias.value
    x = rng.standard_normal((3, 6, 5))
    npt.assert_array_equal(conv.forward(x), tdd.forward(x))


def test_conv1d_same_padding_contributes_zero():
    # a length-1 sequence under k=3 sees only the center tap; the padded
    # positions multiply the outer taps by zero
    rng = _rng(4)
    conv = Conv1D(3, 2, 3, rng, dtype=F64)
    x = rng.standard_normal((2, 1, 3))
    expected = x[:, 0, :] @ conv.weight.value[1] + conv.bias.value
    npt.assert_allclose(conv.forward(x)[:, 0, :], expected, rtol=1e-15, atol=0)


def test_maxpool_takes_first_argmax_on_ties():
    x = np.zeros((1, 4, 2))
    x[0, :, 0] = [1.0, 3.0, 3.0, 0.0]   # tie between t=1 and t=2
    x[0, :, 1] = [2.0, 2.0, 2.0, 2.0]   # all tied
    pool = MaxPoolTime()
    out = pool.forward(x)
    npt.assert_array_equal(out, [[3.0, 2.0]])
    npt.assert_array_equal(pool._idx, [[1, 0]])
    dx = pool.backward(np.array([[10.0, 20.0]]))
    expected = np.zeros_like(x)
    expected[0, 1, 0] = 10.0
    expected[0, 0, 1] = 20.0
    npt.assert_array_equal(dx, expected)


def test_attention_weights_are_a_distribution():
    rng = _rng(5)
    layer = AttentionPool(4, rng, dtype=F64)
    _, alpha = layer.forward(rng.standard_normal((6, 9, 4)))
    assert np.all(alpha >= 0)
    npt.assert_allclose(alpha.sum(axis=1), 1.0, rtol=0, atol=1e-12)


def test_attention_pool_of_constant_sequence_is_that_constant():
    rng = _rng(6)
    layer = AttentionPool(4, rng, dtype=F64)
    row = rng.standard_normal(4)
    h = np.broadcast_to(row, (2, 7, 4)).copy()
    pooled, _ = layer.forward(h)
    npt.assert_allclose(pooled, np.broadcast_to(row, (2, 4)), rtol=1e-12, atol=1e-15)


def test_concat_splits_gradient_back():
    cat = Concat()
    a = np.ones((2, 3))
    b = 2 * np.ones((2, 2))
    out = cat.forward([a, b])
    assert out.shape == (2, 5)
    g = np.arange(10.0).reshape(2, 5)
    ga, gb = cat.backward(g)
    npt.assert_array_equal(ga, g[:, :3])
    npt.assert_array_equal(gb, g[:, 3:])


def test_softmax_rows_sum_to_one_and_shift_invariant():
    rng = _rng(7)
    x = rng.standard_normal((5, 6))
    p = softmax(x)
    npt.assert_allclose(p.sum(axis=1), 1.0, rtol=0, atol=1e-12)
    npt.assert_allclose(softmax(x + 100.0), p, rtol=1e-12, atol=1e-15)


def test_softmax_vjp_of_uniform_upstream_is_zero():
    # d(sum p)/dlogits = 0 because the rows always sum to one
    rng = _rng(8)
    p = softmax(rng.standard_normal((4, 5)))
    npt.assert_allclose(softmax_vjp(p, np.ones_like(p)), 0.0, rtol=0, atol=1e-15)


# ----------------------------------------------------------------- contracts

def test_forward_is_pure_and_backward_accumulates():
    rng = _rng(9)
    layer = Dense(4, 3, rng, dtype=F64)
    x = rng.standard_normal((5, 4))
    first = layer.forward(x)
    npt.assert_array_equal(layer.forward(x), first)
    g = rng.standard_normal((5, 3))
    layer.forward(x)
    layer.backward(g)
    once = layer.weight.grad.copy()
    layer.backward(g)
    npt.assert_allclose(layer.weight.grad, 2.0 * once, rtol=1e-15, atol=0)


def test_dimension_errors():
    rng = _rng(10)
    with pytest.raises(DimensionError):
        Dense(3, 2, rng).forward(np.zeros((4, 5)))
    with pytest.raises(DimensionError):
        Conv1D(3, 2, 2, rng)   # even kernel
    with pytest.raises(DimensionError):
        Dense(0, 2, rng)
    for make in (lambda: LSTM(3, 2, rng, dtype=F64),
                 lambda: AttentionPool(3, rng, dtype=F64),
                 lambda: MaxPoolTime()):
        with pytest.raises(DimensionError):
            make().forward(np.zeros((2, 0, 3)))


def test_glorot_uniform_bounds():
    rng = _rng(11)
    w = glorot_uniform(rng, (40, 30), 40, 30, F64)
    limit = np.sqrt(6.0 / 70.0)
    assert np.all(np.abs(w) <= limit)
    assert np.abs(w).max() > 0.8 * limit   # actually fills the range
