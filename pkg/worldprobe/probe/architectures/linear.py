# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import numpy as np

from worldprobe.nn import Tensor, linear
from worldprobe.nn.init import fan_in_uniform, zeros
from worldprobe.probe.architectures.probe import Probe
from worldprobe.probe.config import ProbeConfig

__all__ = ["LinearProbe"]


class LinearProbe(Probe):
    """Single affine layer onto both heads."""

    arch = "linear"

    def __init__(self, input_dim: int, config: ProbeConfig):
        super().__init__(input_dim, config)
        rng = np.random.default_rng(config.seed)
        out = 2 * config.n_classes
        self.register("out.weight", fan_in_uniform((out, input_dim), rng))
        self.register("out.bias", zeros(out))

    def scores(self, x: Tensor) -> Tensor:
        return linear(x, self["out.weight"], self["out.bias"])
