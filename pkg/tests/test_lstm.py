import numpy as np
import pytest

from lexipivot.errors import ShapeError
from lexipivot.numerics import LstmWeights, Tensor, lstm_step, reshape, matmul

from helpers import assert_grads_close


def make_weights(d_in, hidden, rng=None, zero=False):
    if zero:
        w_ih = np.zeros((d_in, 4 * hidden))
        w_hh = np.zeros((hidden, 4 * hidden))
        bias = np.zeros(4 * hidden)
    else:
        w_ih = rng.normal(scale=0.5, size=(d_in, 4 * hidden))
        w_hh = rng.normal(scale=0.5, size=(hidden, 4 * hidden))
        bias = rng.normal(scale=0.5, size=4 * hidden)
    return LstmWeights(
        w_ih=Tensor(w_ih, requires_grad=True),
        w_hh=Tensor(w_hh, requires_grad=True),
        bias=Tensor(bias, requires_grad=True),
    )


def test_all_zero_fixed_point():
    weights = make_weights(3, 4, zero=True)
    h, c = lstm_step(Tensor(np.zeros(3)), (Tensor(np.zeros(4)), Tensor(np.zeros(4))), weights)
    np.testing.assert_allclose(h.data, 0.0)
    np.testing.assert_allclose(c.data, 0.0)


def test_forget_gate_saturation_preserves_cell():
    hidden = 4
    weights = make_weights(2, hidden, zero=True)
    bias = weights.bias.data
    bias[0:hidden] = -25.0       # input gate ~ 0
    bias[hidden:2 * hidden] = 25.0  # forget gate ~ 1
    c0 = np.array([0.3, -0.7, 1.1, 0.05])
    _, c1 = lstm_step(Tensor(np.zeros(2)), (Tensor(np.zeros(hidden)), Tensor(c0)), weights)
    np.testing.assert_allclose(c1.data, c0, atol=1e-6)


def test_shape_mismatch():
    weights = make_weights(3, 4, zero=True)
    with pytest.raises(ShapeError):
        lstm_step(Tensor(np.zeros(5)), (Tensor(np.zeros(4)), Tensor(np.zeros(4))), weights)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(11)
    d_in, hidden = 3, 4
    weights = make_weights(d_in, hidden, rng)
    x = Tensor(rng.normal(size=d_in), requires_grad=True)
    h0 = Tensor(rng.normal(size=hidden), requires_grad=True)
    c0 = Tensor(rng.normal(size=hidden), requires_grad=True)
    w_out = Tensor(rng.normal(size=(2 * hidden, 1)))

    def f():
        h1, c1 = lstm_step(x, (h0, c0), weights)
        both = reshape(h1, (1, hidden)), reshape(c1, (1, hidden))
        stacked = matmul(both[0], Tensor(np.eye(hidden)))
        from lexipivot.numerics import concat_cols
        return matmul(concat_cols([stacked, both[1]]), w_out)

    assert_grads_close(
        f, [x, h0, c0, weights.w_ih, weights.w_hh, weights.bias], tol=1e-4, eps=1e-5)


def test_batched_matches_single():
    rng = np.random.default_rng(12)
    weights = make_weights(3, 4, rng)
    xs = rng.normal(size=(5, 3))
    h0 = rng.normal(size=(5, 4))
    c0 = rng.normal(size=(5, 4))
    h_b, c_b = lstm_step(Tensor(xs), (Tensor(h0), Tensor(c0)), weights)
    for i in range(5):
        h_i, c_i = lstm_step(Tensor(xs[i]), (Tensor(h0[i]), Tensor(c0[i])), weights)
        np.testing.assert_allclose(h_b.data[i], h_i.data, atol=1e-12)
        np.testing.assert_allclose(c_b.data[i], c_i.data, atol=1e-12)
