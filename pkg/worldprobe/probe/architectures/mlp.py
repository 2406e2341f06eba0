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

__all__ = ["MLP3Probe"]


class MLP3Probe(Probe):
    """Three linear layers with ReLUs in between, shared by both heads."""

    arch = "mlp3"

    def __init__(self, input_dim: int, config: ProbeConfig):
        super().__init__(input_dim, config)
        rng = np.random.default_rng(config.seed)
        hidden, out = config.hidden_dim, 2 * config.n_classes

        self.register("fc1.weight", fan_in_uniform((hidden, input_dim), rng))
        self.register("fc1.bias", zeros(hidden))
        self.register("fc2.weight", fan_in_uniform((hidden, hidden), rng))
        self.register("fc2.bias", zeros(hidden))
        self.register("fc3.weight", fan_in_uniform((out, hidden), rng))
        self.register("fc3.bias", zeros(out))

    def scores(self, x: Tensor) -> Tensor:
        x = linear(x, self["fc1.weight"], self["fc1.bias"]).relu()
        x = linear(x, self["fc2.weight"], self["fc2.bias"]).relu()
        return linear(x, self["fc3.weight"], self["fc3.bias"])
