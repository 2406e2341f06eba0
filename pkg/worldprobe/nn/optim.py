# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Adam with bias correction and global-norm gradient clipping."""
import logging
from typing import Iterable, List, Sequence

import numpy as np

from worldprobe.exceptions import NonFiniteError, ShapeMismatchError
from worldprobe.nn.tensor import Tensor

__all__ = ["AdamState", "adam_update", "Adam", "clip_grad_norm"]

log = logging.getLogger(__name__)


class AdamState:
    """First/second moments and step count for a list of parameters."""

    def __init__(self, shapes: Sequence[tuple], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 dtype=np.float64):
        self.m: List[np.ndarray] = [np.zeros(s, dtype=dtype) for s in shapes]
        self.v: List[np.ndarray] = [np.zeros(s, dtype=dtype) for s in shapes]
        self.t = 0
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def __repr__(self):
        return (f"AdamState(t={self.t}, lr={self.lr}, beta1={self.beta1},"
                f" beta2={self.beta2}, eps={self.eps})")


def adam_update(params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
                state: AdamState) -> List[np.ndarray]:
    """
    One Adam step.

    The moments in ``state`` advance, the inputs are left untouched.

    :return: updated copies of ``params``.
    """

    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatchError(
            f"Got {len(params)} parameters, {len(grads)} gradients"
            f" and state for {len(state.m)}.")

    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape or p.shape != state.m[i].shape:
            raise ShapeMismatchError(
                f"Parameter {i} has shape {p.shape}, gradient {g.shape}.")
        if not np.isfinite(g).all():
            raise NonFiniteError(f"Gradient of parameter {i} is not finite.")

    state.t += 1
    correction1 = 1.0 - state.beta1**state.t
    correction2 = 1.0 - state.beta2**state.t

    updated = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g

        m_hat = state.m[i] / correction1
        v_hat = state.v[i] / correction2

        step = state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        updated.append((p - step).astype(p.dtype))

    return updated


class Adam:
    """Adam over a fixed list of parameter tensors."""

    def __init__(self, parameters: Iterable[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.parameters = list(parameters)
        self.state = AdamState([p.shape for p in self.parameters],
                               lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def zero_grad(self) -> None:
        for p in self.parameters:
            p.grad = None

    def step(self) -> None:
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data)
                 for p in self.parameters]
        updated = adam_update([p.data for p in self.parameters], grads, self.state)

        for p, new in zip(self.parameters, updated):
            p.data[...] = new


def clip_grad_norm(parameters: Iterable[Tensor], max_norm: float) -> float:
    """
    Rescale gradients so their global L2 norm is at most ``max_norm``.

    :return: the norm before clipping.
    """

    parameters = [p for p in parameters if p.grad is not None]
    total = float(np.sqrt(sum(float(np.sum(np.square(p.grad, dtype=np.float64)))
                              for p in parameters)))

    if not np.isfinite(total):
        raise NonFiniteError("Gradient norm is not finite.")

    if total > max_norm:
        scale = max_norm / (total + 1e-6)
        for p in parameters:
            p.grad = p.grad * scale

    return total
