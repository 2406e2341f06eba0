# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Layer operations, losses and sampling built on :class:`Tensor`."""
from typing import Callable, Dict, NamedTuple, Optional, Tuple, Union

import numpy as np

from worldprobe.exceptions import (
    ConfigError,
    IndexOutOfRangeError,
    NonFiniteError,
    ShapeMismatchError,
)
from worldprobe.nn.tensor import Tensor

__all__ = [
    "LSTMParams",
    "embedding",
    "conv2d",
    "linear",
    "lstm_step",
    "log_softmax",
    "softmax",
    "softmax_array",
    "cross_entropy",
    "entropy",
    "categorical",
    "sample_categorical",
    "get_activation",
]

# upper bound on the number of values of one im2col block
IM2COL_BLOCK = 1 << 24


class LSTMParams(NamedTuple):
    w_ih: Tensor
    w_hh: Tensor
    bias: Tensor


def embedding(ids, table: Tensor) -> Tensor:
    """
    Look up rows of ``table`` for every integer in ``ids``.

    :param ids: integer array of any shape.
    :param table: tensor of shape (vocab, dim).
    :return: tensor of shape ids.shape + (dim,).
    """

    ids = np.asarray(ids)
    vocab, dim = table.shape

    if ids.size and not np.issubdtype(ids.dtype, np.integer):
        raise IndexOutOfRangeError(f"Glyph ids must be integers, got {ids.dtype}.")

    invalid = (ids < 0) | (ids >= vocab)
    if invalid.any():
        bad = int(ids[invalid].reshape(-1)[0])
        raise IndexOutOfRangeError(
            f"Glyph id {bad} is outside of vocabulary of size {vocab}.")

    flat = ids.reshape(-1)

    def backward(g):
        grad = np.zeros_like(table.data)
        np.add.at(grad, flat, g.reshape(-1, dim))
        return (grad,)

    return Tensor._from_op(table.data[ids], (table,), backward, "embedding")


def _im2col(padded: np.ndarray, h: int, w: int) -> np.ndarray:
    n, c = padded.shape[:2]
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(2, 3))
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * w, c * 9)


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    3x3 cross-correlation with zero same-padding.

    The im2col matrix is built for blocks of samples so that it never holds
    more than ``IM2COL_BLOCK`` values at once.

    :param x: input of shape (C_in, H, W) or (N, C_in, H, W).
    :param weight: kernel of shape (C_out, C_in, 3, 3).
    :param bias: optional bias of shape (C_out,).
    :return: output with the spatial size of the input.
    """

    if x.ndim == 3:
        return conv2d(x.reshape((1,) + x.shape), weight, bias).reshape(
            (weight.shape[0],) + x.shape[1:])

    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeMismatchError(
            f"conv2d expects 4-D input and kernel, got {x.shape} and {weight.shape}.")

    c_out, c_in, kh, kw = weight.shape
    n, c, h, w = x.shape

    if (kh, kw) != (3, 3):
        raise ShapeMismatchError(f"conv2d supports 3x3 kernels only, got {kh}x{kw}.")

    if c != c_in:
        raise ShapeMismatchError(
            f"conv2d kernel expects {c_in} input channels, input has {c}.")

    if bias is not None and bias.shape != (c_out,):
        raise ShapeMismatchError(
            f"conv2d bias must have shape ({c_out},), got {bias.shape}.")

    padded = np.pad(x.data, ((0, 0), (0, 0), (1, 1), (1, 1)))
    kernel = weight.data.reshape(c_out, c * 9)
    step = max(1, IM2COL_BLOCK // (h * w * c * 9))
    blocks = [slice(start, min(start + step, n)) for start in range(0, n, step)]

    out = np.empty((n, c_out, h, w), dtype=np.result_type(x.data, kernel))
    for block in blocks:
        rows = _im2col(padded[block], h, w) @ kernel.T
        if bias is not None:
            rows = rows + bias.data
        out[block] = rows.reshape(-1, h, w, c_out).transpose(0, 3, 1, 2)

    def backward(g):
        grad_w = np.zeros_like(kernel)
        grad_padded = np.zeros_like(padded)

        for block in blocks:
            g_cols = g[block].transpose(0, 2, 3, 1).reshape(-1, c_out)
            grad_w += g_cols.T @ _im2col(padded[block], h, w)
            d_cols = (g_cols @ kernel).reshape(-1, h, w, c, 3, 3)

            target = grad_padded[block]
            for i in range(3):
                for j in range(3):
                    target[:, :, i:i + h, j:j + w] += d_cols[..., i, j].transpose(0, 3, 1, 2)

        grads = (grad_padded[:, :, 1:-1, 1:-1], grad_w.reshape(weight.shape))
        if bias is not None:
            grads += (g.sum(axis=(0, 2, 3)),)
        return grads

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor._from_op(out, parents, backward, "conv2d")


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    Affine map ``x @ weight.T + bias``.

    :param x: input of shape (n,) or (N, n).
    :param weight: matrix of shape (m, n).
    :param bias: optional vector of shape (m,).
    """

    m, n = weight.shape

    if x.ndim not in (1, 2) or x.shape[-1] != n:
        raise ShapeMismatchError(
            f"linear expects inputs with {n} features, got shape {x.shape}.")

    if bias is not None and bias.shape != (m,):
        raise ShapeMismatchError(
            f"linear bias must have shape ({m},), got {bias.shape}.")

    out = x.data @ weight.data.T
    if bias is not None:
        out = out + bias.data

    def backward(g):
        if x.ndim == 1:
            grads = (g @ weight.data, np.outer(g, x.data))
            bias_grad = g
        else:
            grads = (g @ weight.data, g.T @ x.data)
            bias_grad = g.sum(axis=0)
        return grads if bias is None else grads + (bias_grad,)

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor._from_op(out, parents, backward, "linear")


def lstm_step(x: Tensor, h: Tensor, c: Tensor,
              params: LSTMParams) -> Tuple[Tensor, Tensor]:
    """
    One LSTM cell update with gate order (input, forget, cell, output).

    :return: new hidden and cell states.
    """

    hidden = params.w_hh.shape[1]

    if params.w_ih.shape[0] != 4 * hidden or params.w_hh.shape[0] != 4 * hidden:
        raise ShapeMismatchError(
            f"LSTM weights must have {4 * hidden} rows for state size {hidden}.")

    if h.shape[-1] != hidden or c.shape[-1] != hidden or h.shape != c.shape:
        raise ShapeMismatchError(
            f"LSTM state must have size {hidden}, got {h.shape} and {c.shape}.")

    gates = linear(x, params.w_ih, params.bias) + linear(h, params.w_hh)

    i = gates[..., :hidden].sigmoid()
    f = gates[..., hidden:2 * hidden].sigmoid()
    g = gates[..., 2 * hidden:3 * hidden].tanh()
    o = gates[..., 3 * hidden:].sigmoid()

    c_next = f * c + i * g
    h_next = o * c_next.tanh()

    return h_next, c_next


def log_softmax(logits: Tensor, axis: int = -1) -> Tensor:
    shifted = logits.data - logits.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward(g):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return Tensor._from_op(out, (logits,), backward, "log_softmax")


def softmax(logits: Tensor, axis: int = -1) -> Tensor:
    return log_softmax(logits, axis).exp()


def softmax_array(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def cross_entropy(logits: Tensor, target) -> Tensor:
    """
    Negative log-likelihood of ``target`` under ``softmax(logits)``.

    A batch of logits (N, k) with N targets gives the batch mean.
    """

    k = logits.shape[-1]
    target = np.asarray(target)

    invalid = (target < 0) | (target >= k)
    if np.any(invalid):
        bad = int(np.atleast_1d(target)[np.atleast_1d(invalid)][0])
        raise IndexOutOfRangeError(f"Target {bad} is outside of {k} classes.")

    log_probs = log_softmax(logits)

    if logits.ndim == 1:
        return -log_probs[int(target)]

    if target.shape != logits.shape[:1]:
        raise ShapeMismatchError(
            f"Expected {logits.shape[0]} targets, got shape {target.shape}.")

    return -log_probs[np.arange(len(target)), target].mean()


def entropy(logits: Tensor) -> Tensor:
    log_probs = log_softmax(logits)
    return -(log_probs.exp() * log_probs).sum(axis=-1)


def _check_logits(logits: np.ndarray) -> None:
    if logits.shape[-1] < 2:
        raise ShapeMismatchError("A categorical needs at least 2 classes.")
    if not np.isfinite(logits).all():
        raise NonFiniteError("Logits must be finite.")


def sample_categorical(logits: np.ndarray,
                       rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw one index per row of ``logits`` (N, k).

    :return: sampled indices and their log-probabilities.
    """

    logits = np.asarray(logits, dtype=np.float64)
    _check_logits(logits)

    shifted = logits - logits.max(axis=-1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    cdf = np.cumsum(np.exp(log_probs), axis=-1)

    u = rng.random(logits.shape[0])
    actions = np.minimum((cdf < u[:, None]).sum(axis=-1), logits.shape[-1] - 1)

    return actions, log_probs[np.arange(len(actions)), actions]


def categorical(logits: Union[Tensor, np.ndarray],
                rng: np.random.Generator) -> Tuple[int, float]:
    """Sample a single action from a vector of logits."""

    data = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    actions, log_probs = sample_categorical(data.reshape(1, -1), rng)
    return int(actions[0]), float(log_probs[0])


_ACTIVATIONS: Dict[str, Callable[[Tensor], Tensor]] = {
    "elu": lambda t: t.elu(),
    "relu": lambda t: t.relu(),
    "tanh": lambda t: t.tanh(),
}


def get_activation(name: str) -> Callable[[Tensor], Tensor]:
    try:
        return _ACTIVATIONS[name]
    except KeyError:
        raise ConfigError(f"Unknown activation {name!r}.") from None
