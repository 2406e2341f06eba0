# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import abc
from typing import Tuple

import numpy as np

from worldprobe.exceptions import DimensionMismatchError
from worldprobe.nn import Module, Tensor
from worldprobe.probe.config import ProbeConfig

__all__ = ["Probe"]


class Probe(Module, metaclass=abc.ABCMeta):
    """
    Position classifier with an x head and a y head.

    Subclasses map activations of shape (N, input_dim) to
    ``2 * n_classes`` scores; the first half scores x, the second y.
    """

    arch = "probe"

    def __init__(self, input_dim: int, config: ProbeConfig):
        super().__init__()
        self.input_dim = input_dim
        self.config = config
        self.history = []

    @abc.abstractmethod
    def scores(self, x: Tensor) -> Tensor:
        raise NotImplementedError()

    def heads(self, activations) -> Tuple[Tensor, Tensor]:
        x = activations if isinstance(activations, Tensor) else Tensor(activations)

        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise DimensionMismatchError(
                f"Probe expects activations of size {self.input_dim},"
                f" got shape {x.shape}.")

        out = self.scores(x)
        k = self.config.n_classes
        return out[:, :k], out[:, k:]

    def predict(self, activations: np.ndarray,
                batch_size: int = 4096) -> Tuple[np.ndarray, np.ndarray]:
        """Argmax of both heads, ties go to the lowest index."""

        xs, ys = [], []
        for start in range(0, len(activations), batch_size):
            x_scores, y_scores = self.heads(activations[start:start + batch_size])
            xs.append(np.argmax(x_scores.data, axis=-1))
            ys.append(np.argmax(y_scores.data, axis=-1))

        if not xs:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        return np.concatenate(xs), np.concatenate(ys)

    def __repr__(self):
        return f"{type(self).__name__}(input_dim={self.input_dim}, lr={self.config.lr})"
