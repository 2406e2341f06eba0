from unittest.mock import patch

import numpy as np
import pytest

from worldprobe.exceptions import IndexOutOfRangeError, NonFiniteError, ShapeMismatchError
from worldprobe.nn import (
    LSTMParams,
    Tensor,
    check_gradients,
    conv2d,
    cross_entropy,
    embedding,
    functional,
    linear,
    lstm_step,
    precision,
    softmax,
)

TOLERANCE = 1e-5


def _assert_gradients(fn, inputs):
    report = check_gradients(fn, inputs)
    assert set(report) == set(inputs)
    for name, error in report.items():
        assert error < TOLERANCE, f"{name}: {error:.2e}"


def test_embedding_identity_table():
    table = Tensor(np.eye(4))
    out = embedding(np.array([2]), table)
    assert np.array_equal(out.data, [[0, 0, 1, 0]])


def test_embedding_constant_ids_give_identical_rows():
    table = Tensor(np.random.default_rng(0).normal(size=(11, 6)))
    out = embedding(np.zeros((3, 5), dtype=np.int64), table)
    assert out.shape == (3, 5, 6)
    assert np.all(out.data == out.data[0, 0])


def test_embedding_out_of_range():
    with pytest.raises(IndexOutOfRangeError, match="5"):
        embedding(np.array([1, 5]), Tensor(np.zeros((4, 2))))
    with pytest.raises(IndexOutOfRangeError):
        embedding(np.array([-1]), Tensor(np.zeros((4, 2))))


def test_embedding_gradient():
    rng = np.random.default_rng(1)
    ids = rng.integers(0, 5, size=(3, 4))
    weights = rng.normal(size=(3, 4, 3))

    _assert_gradients(lambda t: (embedding(ids, t["table"]) * weights).sum(),
                      {"table": rng.normal(size=(5, 3))})


def test_conv_delta_kernel_is_identity():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(3, 6, 7))
    weight = np.zeros((3, 3, 3, 3))
    for c in range(3):
        weight[c, c, 1, 1] = 1.0

    with precision(np.float64):
        out = conv2d(Tensor(x), Tensor(weight), Tensor(np.zeros(3)))

    assert out.shape == x.shape
    assert np.allclose(out.data, x)


def test_conv_zero_kernel():
    x = Tensor(np.ones((2, 2, 4, 4)))
    out = conv2d(x, Tensor(np.zeros((5, 2, 3, 3))), Tensor(np.zeros(5)))
    assert out.shape == (2, 5, 4, 4)
    assert not out.data.any()


def test_conv_channel_mismatch():
    with pytest.raises(ShapeMismatchError):
        conv2d(Tensor(np.ones((3, 4, 4))), Tensor(np.zeros((2, 2, 3, 3))))


def test_conv_gradient():
    rng = np.random.default_rng(3)
    readout = rng.normal(size=(2, 3, 4, 5))

    def fn(t):
        return (conv2d(t["x"], t["weight"], t["bias"]) * readout).sum()

    _assert_gradients(fn, {
        "x": rng.normal(size=(2, 2, 4, 5)),
        "weight": rng.normal(size=(3, 2, 3, 3)),
        "bias": rng.normal(size=3),
    })


def _conv_outputs(x, weight, bias, readout):
    tensors = [Tensor(a, requires_grad=True) for a in (x, weight, bias)]
    out = conv2d(*tensors)
    (out * readout).sum().backward()
    return [out.data] + [t.grad for t in tensors]


def test_conv_blocks_match_single_pass():
    rng = np.random.default_rng(4)
    x, weight, bias = (rng.normal(size=(5, 2, 4, 6)), rng.normal(size=(3, 2, 3, 3)),
                       rng.normal(size=3))
    readout = rng.normal(size=(5, 3, 4, 6))

    with precision(np.float64):
        whole = _conv_outputs(x, weight, bias, readout)
        with patch.object(functional, "IM2COL_BLOCK", 2 * 4 * 6 * 9 * 2):
            blocked = _conv_outputs(x, weight, bias, readout)
        with patch.object(functional, "IM2COL_BLOCK", 1):
            single = _conv_outputs(x, weight, bias, readout)

    for a, b, c in zip(whole, blocked, single):
        assert np.allclose(a, b, atol=1e-12)
        assert np.allclose(a, c, atol=1e-12)


def test_linear_identity_and_zero_input():
    with precision(np.float64):
        x = Tensor(np.array([[1.0, -2.0, 3.0]]))
        out = linear(x, Tensor(np.eye(3)), Tensor(np.zeros(3)))
        assert np.allclose(out.data, x.data)

        bias = Tensor(np.array([0.5, -1.0]))
        out = linear(Tensor(np.zeros(3)), Tensor(np.ones((2, 3))), bias)
        assert np.allclose(out.data, bias.data)


def test_linear_dimension_mismatch():
    with pytest.raises(ShapeMismatchError):
        linear(Tensor(np.ones((2, 4))), Tensor(np.ones((3, 5))))


def test_linear_gradient():
    rng = np.random.default_rng(4)
    readout = rng.normal(size=(6, 2))

    _assert_gradients(
        lambda t: (linear(t["x"], t["weight"], t["bias"]) * readout).sum(),
        {"x": rng.normal(size=(6, 5)),
         "weight": rng.normal(size=(2, 5)),
         "bias": rng.normal(size=2)})


def test_lstm_with_zero_parameters():
    size = 3
    c0 = np.array([[0.4, -1.2, 2.0]])

    with precision(np.float64):
        params = LSTMParams(Tensor(np.zeros((4 * size, 2))),
                            Tensor(np.zeros((4 * size, size))),
                            Tensor(np.zeros(4 * size)))
        h, c = lstm_step(Tensor(np.ones((1, 2))), Tensor(np.zeros((1, size))),
                         Tensor(c0), params)

    assert np.allclose(c.data, 0.5 * c0)
    assert np.allclose(h.data, 0.5 * np.tanh(0.5 * c0))


def test_lstm_state_size_mismatch():
    params = LSTMParams(Tensor(np.zeros((8, 2))), Tensor(np.zeros((8, 2))),
                        Tensor(np.zeros(8)))
    with pytest.raises(ShapeMismatchError):
        lstm_step(Tensor(np.ones((1, 2))), Tensor(np.zeros((1, 3))),
                  Tensor(np.zeros((1, 3))), params)


def test_lstm_gradient_through_three_steps():
    rng = np.random.default_rng(5)
    size, n_in = 6, 4
    readout_h = rng.normal(size=size)
    readout_c = rng.normal(size=size)

    def fn(t):
        params = LSTMParams(t["w_ih"], t["w_hh"], t["bias"])
        h, c = t["h0"], t["c0"]
        for step in range(3):
            h, c = lstm_step(t["x"][step], h, c, params)
        return (h * readout_h).sum() + (c * readout_c).sum()

    _assert_gradients(fn, {
        "w_ih": rng.normal(scale=0.5, size=(4 * size, n_in)),
        "w_hh": rng.normal(scale=0.5, size=(4 * size, size)),
        "bias": rng.normal(scale=0.5, size=4 * size),
        "x": rng.normal(size=(3, n_in)),
        "h0": rng.normal(size=size),
        "c0": rng.normal(size=size),
    })


def test_softmax_sums_to_one():
    logits = np.random.default_rng(6).normal(scale=10, size=(8, 15))

    with precision(np.float64):
        probs = softmax(Tensor(logits)).data
    assert np.abs(probs.sum(axis=-1) - 1).max() < 1e-12

    probs = softmax(Tensor(logits, dtype=np.float32)).data
    assert np.abs(probs.sum(axis=-1) - 1).max() < 1e-5


def test_cross_entropy_values():
    with precision(np.float64):
        peaked = np.zeros(4)
        peaked[2] = 20.0
        assert cross_entropy(Tensor(peaked), 2).item() < 1e-8

        uniform = cross_entropy(Tensor(np.zeros(15)), 7).item()
        assert uniform == pytest.approx(np.log(15), abs=1e-12)


def test_cross_entropy_out_of_range():
    with pytest.raises(IndexOutOfRangeError):
        cross_entropy(Tensor(np.zeros(15)), 15)
    with pytest.raises(IndexOutOfRangeError):
        cross_entropy(Tensor(np.zeros((2, 15))), np.array([0, -1]))


def test_cross_entropy_gradient():
    rng = np.random.default_rng(7)
    target = rng.integers(0, 13, size=9)

    _assert_gradients(lambda t: cross_entropy(t["logits"], target),
                      {"logits": rng.normal(size=(9, 13))})


def test_composed_network_gradient():
    rng = np.random.default_rng(8)
    target = rng.integers(0, 4, size=5)

    def fn(t):
        x = linear(t["x"], t["w1"], t["b1"]).tanh()
        x = linear(x, t["w2"], t["b2"]).elu()
        return cross_entropy(linear(x, t["w3"], t["b3"]), target)

    _assert_gradients(fn, {
        "x": rng.normal(size=(5, 6)),
        "w1": rng.normal(size=(7, 6)),
        "b1": rng.normal(size=7),
        "w2": rng.normal(size=(5, 7)),
        "b2": rng.normal(size=5),
        "w3": rng.normal(size=(4, 5)),
        "b3": rng.normal(size=4),
    })


def test_operations_do_not_mutate_inputs():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(2, 3, 4, 4))
    weight = rng.normal(size=(2, 3, 3, 3))
    before = x.copy(), weight.copy()

    with precision(np.float64):
        xt = Tensor(x, requires_grad=True)
        wt = Tensor(weight, requires_grad=True)
        conv2d(xt, wt).sum().backward()

    assert np.array_equal(x, before[0])
    assert np.array_equal(weight, before[1])


def test_non_finite_values_are_rejected():
    with pytest.raises(NonFiniteError):
        Tensor(np.array([-1.0])).log()
    with pytest.raises(NonFiniteError):
        linear(Tensor(np.array([np.nan, 1.0])), Tensor(np.eye(2)))


def test_backward_accumulates_over_shared_inputs():
    with precision(np.float64):
        x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        (x * x + x).sum().backward()
    assert np.allclose(x.grad, [3.0, 5.0])
