# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Parameter initializers, all driven by an explicit numpy Generator."""
from typing import Tuple

import numpy as np

from worldprobe.nn.tensor import get_default_dtype

__all__ = ["orthogonal", "uniform_embedding", "fan_in_uniform", "zeros"]

RELU_GAIN = float(np.sqrt(2.0))


def orthogonal(shape: Tuple[int, ...], gain: float,
               rng: np.random.Generator) -> np.ndarray:
    """
    Orthogonal matrix over the flattened fan-in, scaled by ``gain``.

    :param shape: (out, in) or (out, in, kh, kw).
    """

    rows = shape[0]
    cols = int(np.prod(shape[1:]))

    flat = rng.standard_normal((rows, cols))
    if rows < cols:
        flat = flat.T

    q, r = np.linalg.qr(flat)
    q = q * np.sign(np.diag(r))

    if rows < cols:
        q = q.T

    return (gain * q).reshape(shape).astype(get_default_dtype())


def uniform_embedding(vocab: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    bound = 1.0 / np.sqrt(dim)
    return rng.uniform(-bound, bound, size=(vocab, dim)).astype(get_default_dtype())


def zeros(*shape: int) -> np.ndarray:
    return np.zeros(shape, dtype=get_default_dtype())


def fan_in_uniform(shape: Tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) over the trailing dimensions."""

    bound = 1.0 / np.sqrt(int(np.prod(shape[1:])) if len(shape) > 1 else shape[0])
    return rng.uniform(-bound, bound, size=shape).astype(get_default_dtype())
