# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Central finite-difference verification of analytic gradients."""
import logging
from typing import Callable, Dict

import numpy as np

from worldprobe.nn.tensor import Tensor, precision

__all__ = ["numeric_gradient", "check_gradients"]

log = logging.getLogger(__name__)


def numeric_gradient(fn: Callable[[Dict[str, Tensor]], Tensor],
                     inputs: Dict[str, np.ndarray], name: str,
                     h: float = 1e-5) -> np.ndarray:
    """Central differences of scalar ``fn`` with respect to ``inputs[name]``."""

    base = {k: np.array(v, dtype=np.float64) for k, v in inputs.items()}
    target = base[name]
    grad = np.zeros_like(target)

    for index in np.ndindex(target.shape):
        original = target[index]

        target[index] = original + h
        plus = fn({k: Tensor(v, dtype=np.float64) for k, v in base.items()}).item()

        target[index] = original - h
        minus = fn({k: Tensor(v, dtype=np.float64) for k, v in base.items()}).item()

        target[index] = original
        grad[index] = (plus - minus) / (2.0 * h)

    return grad


def check_gradients(fn: Callable[[Dict[str, Tensor]], Tensor],
                    inputs: Dict[str, np.ndarray],
                    h: float = 1e-5) -> Dict[str, float]:
    """
    Compare backward-pass gradients with central finite differences.

    Runs in 64-bit. The error for each input is
    ``max|analytic - numeric| / max(max|analytic|, max|numeric|)``.

    :param fn: maps a dict of tensors to a scalar tensor.
    :param inputs: arrays to differentiate with respect to.
    :return: maximum relative error per input name.
    """

    with precision(np.float64):
        tensors = {k: Tensor(v, requires_grad=True, dtype=np.float64)
                   for k, v in inputs.items()}
        fn(tensors).backward()

        report = {}
        for name, tensor in tensors.items():
            analytic = (tensor.grad if tensor.grad is not None
                        else np.zeros_like(tensor.data))
            numeric = numeric_gradient(fn, inputs, name, h)

            scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-12)
            report[name] = float(np.abs(analytic - numeric).max() / scale)

            log.debug(f"gradcheck {name}: max relative error {report[name]:.3e}")

    return report
