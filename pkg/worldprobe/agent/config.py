# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
from typing import Dict, List, Tuple

from pydantic import BaseModel, validator

from worldprobe.env.config import CANVAS_SHAPE
from worldprobe.env.glyphs import VOCAB_SIZE

__all__ = ["AgentConfig"]


class AgentConfig(BaseModel):
    """
    Shape of the actor-critic network.

    The map stream only exists when ``use_full_map`` is set and the LSTM
    only when ``lstm`` is set.
    """

    embed_dim: int = 64
    conv_channels: List[int] = [16, 16, 16, 16, 8]
    kernel: int = 3
    hidden_dim: int = 256
    lstm: bool = True
    lstm_size: int = 512
    use_full_map: bool = False
    crop_size: int = 5
    n_actions: int = 4
    activation: str = "elu"
    vocab_size: int = VOCAB_SIZE
    map_shape: Tuple[int, int] = CANVAS_SHAPE

    class Config:
        extra = "forbid"

    @validator("kernel")
    def _kernel(cls, v):
        if v != 3:
            raise ValueError("only 3x3 kernels are supported")
        return v

    @validator("crop_size")
    def _crop(cls, v):
        if v not in (3, 5, 9):
            raise ValueError("crop_size must be one of 3, 5, 9")
        return v

    @validator("n_actions")
    def _actions(cls, v):
        if v not in (4, 8):
            raise ValueError("n_actions must be 4 or 8")
        return v

    @validator("conv_channels")
    def _channels(cls, v):
        if not v or any(c <= 0 for c in v):
            raise ValueError("conv_channels must be a non-empty list of positive ints")
        return v

    @validator("embed_dim", "hidden_dim", "lstm_size", "vocab_size")
    def _positive(cls, v):
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @validator("activation")
    def _activation(cls, v):
        if v not in ("elu", "relu", "tanh"):
            raise ValueError("activation must be one of elu, relu, tanh")
        return v

    @classmethod
    def experiment1(cls) -> "AgentConfig":
        return cls(lstm=False, use_full_map=True, crop_size=9, n_actions=8)

    @classmethod
    def experiment2(cls) -> "AgentConfig":
        return cls(lstm=True, use_full_map=False, crop_size=5, n_actions=4)

    @classmethod
    def experiment3(cls) -> "AgentConfig":
        return cls(lstm=True, use_full_map=False, crop_size=3, n_actions=4)

    @property
    def tap_stream(self) -> str:
        return "map" if self.use_full_map else "crop"

    def stream_shape(self, stream: str) -> Tuple[int, int]:
        return tuple(self.map_shape) if stream == "map" \
            else (self.crop_size, self.crop_size)

    def tap_dims(self) -> Dict[str, int]:
        """Length of every activation tap, in recording order."""

        rows, cols = self.stream_shape(self.tap_stream)
        dims = {f"conv{i}": c * rows * cols
                for i, c in enumerate(self.conv_channels, start=1)}
        dims["linear1"] = self.hidden_dim
        dims["linear2"] = self.hidden_dim

        if self.lstm:
            dims["lstm_hidden"] = self.lstm_size
            dims["lstm_cell"] = self.lstm_size

        return dims

    @property
    def observation_dim(self) -> int:
        return self.crop_size * self.crop_size * self.vocab_size

    def probe_tap_dims(self) -> Dict[str, int]:
        """Network taps plus the one-hot ``observation`` crop."""

        return dict(self.tap_dims(), observation=self.observation_dim)

    @property
    def tap_names(self) -> List[str]:
        return list(self.probe_tap_dims())
