# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
from collections import OrderedDict
from typing import Dict, List

import numpy as np

from worldprobe.exceptions import ShapeMismatchError
from worldprobe.nn.tensor import Tensor, get_default_dtype

__all__ = ["Module"]


class Module:
    """Named parameter store shared by networks and probes."""

    def __init__(self):
        self._parameters: Dict[str, Tensor] = OrderedDict()

    def register(self, name: str, value: np.ndarray) -> Tensor:
        tensor = Tensor(value, requires_grad=True, name=name,
                        dtype=get_default_dtype())
        self._parameters[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._parameters[name]

    def parameters(self) -> List[Tensor]:
        return list(self._parameters.values())

    def named_parameters(self) -> Dict[str, Tensor]:
        return OrderedDict(self._parameters)

    @property
    def num_parameters(self) -> int:
        return int(sum(p.size for p in self._parameters.values()))

    def zero_grad(self) -> None:
        for p in self._parameters.values():
            p.grad = None

    def state_dict(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, p.data.copy())
                           for name, p in self._parameters.items())

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        missing = set(self._parameters) - set(state)
        unexpected = set(state) - set(self._parameters)

        if missing or unexpected:
            raise ShapeMismatchError(
                f"State does not match parameters: missing {sorted(missing)},"
                f" unexpected {sorted(unexpected)}.")

        for name, p in self._parameters.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise ShapeMismatchError(
                    f"Parameter {name} has shape {p.shape}, got {value.shape}.")
            p.data[...] = value
