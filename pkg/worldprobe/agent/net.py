# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""
Recurrent actor-critic network over glyph observations.

Glyph ids are embedded by a table shared between the crop stream and
(optionally) the full-map stream. Each stream runs its own stack of 3x3
convolutions; flattened outputs are concatenated and fed through two
linear layers, an optional LSTM cell and the policy and value heads.
"""
import logging
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from worldprobe.agent.config import AgentConfig
from worldprobe.env.state import Observation
from worldprobe.exceptions import ShapeMismatchError
from worldprobe.nn import (
    LSTMParams,
    Module,
    Tensor,
    concat,
    conv2d,
    embedding,
    get_activation,
    linear,
    lstm_step,
)
from worldprobe.nn.init import RELU_GAIN, orthogonal, uniform_embedding, zeros

__all__ = [
    "AgentNet",
    "AgentOutput",
    "LSTMState",
    "build_agent",
    "agent_forward",
    "initial_state",
    "batch_observations",
    "one_hot_observation",
]

log = logging.getLogger(__name__)


class LSTMState(NamedTuple):
    h: Tensor
    c: Tensor


class AgentOutput(NamedTuple):
    logits: Tensor
    value: Tensor
    state: Optional[LSTMState]
    taps: Dict[str, np.ndarray]


class Encoded(NamedTuple):
    features: Tensor
    taps: Dict[str, np.ndarray]


class AgentNet(Module):
    """
    Actor-critic parameters and the forward pass.

    Parameters are registered under dotted names such as
    ``crop.conv1.weight`` or ``lstm.w_ih``.
    """

    def __init__(self, config: AgentConfig, seed: int = 0):
        super().__init__()

        self.config = config
        self.seed = seed
        self._activation = get_activation(config.activation)

        rng = np.random.default_rng(seed)

        self.register("embedding.weight",
                      uniform_embedding(config.vocab_size, config.embed_dim, rng))

        features = 0
        for stream in self.streams:
            in_channels = config.embed_dim
            for i, channels in enumerate(config.conv_channels, start=1):
                self.register(f"{stream}.conv{i}.weight",
                              orthogonal((channels, in_channels, 3, 3), RELU_GAIN, rng))
                self.register(f"{stream}.conv{i}.bias", zeros(channels))
                in_channels = channels

            rows, cols = config.stream_shape(stream)
            features += in_channels * rows * cols

        self.register("linear1.weight",
                      orthogonal((config.hidden_dim, features), RELU_GAIN, rng))
        self.register("linear1.bias", zeros(config.hidden_dim))
        self.register("linear2.weight",
                      orthogonal((config.hidden_dim, config.hidden_dim), RELU_GAIN, rng))
        self.register("linear2.bias", zeros(config.hidden_dim))

        head_in = config.hidden_dim
        if config.lstm:
            size = config.lstm_size
            self.register("lstm.w_ih", orthogonal((4 * size, config.hidden_dim), 1.0, rng))
            self.register("lstm.w_hh", orthogonal((4 * size, size), 1.0, rng))
            self.register("lstm.bias", zeros(4 * size))
            head_in = size

        self.register("policy.weight", orthogonal((config.n_actions, head_in), 0.01, rng))
        self.register("policy.bias", zeros(config.n_actions))
        self.register("value.weight", orthogonal((1, head_in), 1.0, rng))
        self.register("value.bias", zeros(1))

        log.debug(f"Built agent with {self.num_parameters} parameters"
                  f" (streams={self.streams}, lstm={config.lstm})")

    @property
    def streams(self) -> List[str]:
        return ["crop", "map"] if self.config.use_full_map else ["crop"]

    @property
    def lstm_params(self) -> LSTMParams:
        return LSTMParams(self["lstm.w_ih"], self["lstm.w_hh"], self["lstm.bias"])

    def _check_ids(self, name: str, ids: np.ndarray, shape: Tuple[int, int]) -> None:
        if ids.ndim != 3 or tuple(ids.shape[1:]) != tuple(shape):
            raise ShapeMismatchError(
                f"Expected {name} batch of shape (N, {shape[0]}, {shape[1]}),"
                f" got {ids.shape}.")

    def _stream(self, stream: str, ids: np.ndarray,
                taps: Optional[Dict[str, np.ndarray]]) -> Tensor:
        x = embedding(ids, self["embedding.weight"]).transpose(0, 3, 1, 2)
        record = taps is not None and stream == self.config.tap_stream

        for i in range(1, len(self.config.conv_channels) + 1):
            x = self._activation(conv2d(x, self[f"{stream}.conv{i}.weight"],
                                        self[f"{stream}.conv{i}.bias"]))
            if record:
                taps[f"conv{i}"] = x.data.reshape(len(ids), -1).copy()

        return x.flatten()

    def encode(self, crops: np.ndarray, maps: Optional[np.ndarray] = None,
               record_taps: bool = True) -> Encoded:
        """
        Run the convolutional streams and both linear layers.

        :param crops: glyph ids of shape (N, k, k).
        :param maps: glyph ids of shape (N, 21, 79), required with the map stream.
        """

        crops = np.asarray(crops)
        self._check_ids("crop", crops, self.config.stream_shape("crop"))

        taps: Optional[Dict[str, np.ndarray]] = {} if record_taps else None
        parts = [self._stream("crop", crops, taps)]

        if self.config.use_full_map:
            if maps is None:
                raise ShapeMismatchError("This agent needs the full map as input.")
            maps = np.asarray(maps)
            self._check_ids("map", maps, self.config.stream_shape("map"))
            parts.append(self._stream("map", maps, taps))

        x = parts[0] if len(parts) == 1 else concat(parts, axis=-1)

        x = self._activation(linear(x, self["linear1.weight"], self["linear1.bias"]))
        if taps is not None:
            taps["linear1"] = x.data.copy()

        x = self._activation(linear(x, self["linear2.weight"], self["linear2.bias"]))
        if taps is not None:
            taps["linear2"] = x.data.copy()

        return Encoded(x, taps or {})

    def recur(self, x: Tensor, state: LSTMState) -> LSTMState:
        h, c = lstm_step(x, state.h, state.c, self.lstm_params)
        return LSTMState(h, c)

    def heads(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        logits = linear(x, self["policy.weight"], self["policy.bias"])
        value = linear(x, self["value.weight"], self["value.bias"])
        return logits, value.reshape(-1)

    def forward(self, crops: np.ndarray, maps: Optional[np.ndarray] = None,
                state: Optional[LSTMState] = None,
                record_taps: bool = True) -> AgentOutput:
        """Batched forward pass, see :func:`agent_forward`."""

        if self.config.lstm and state is None:
            raise ShapeMismatchError("A recurrent agent needs an LSTM state.")
        if not self.config.lstm and state is not None:
            raise ShapeMismatchError("A feed-forward agent takes no LSTM state.")

        encoded = self.encode(crops, maps, record_taps)
        x, taps = encoded.features, encoded.taps

        if self.config.lstm:
            if state.h.shape != (len(crops), self.config.lstm_size):
                raise ShapeMismatchError(
                    f"LSTM state must have shape ({len(crops)}, {self.config.lstm_size}),"
                    f" got {state.h.shape}.")
            state = self.recur(x, state)
            x = state.h
            if record_taps:
                taps["lstm_hidden"] = state.h.data.copy()
                taps["lstm_cell"] = state.c.data.copy()

        logits, value = self.heads(x)
        return AgentOutput(logits, value, state, taps)

    __call__ = forward


def one_hot_observation(ids: np.ndarray, vocab: int) -> np.ndarray:
    """Flattened one-hot encoding of a (N, k, k) glyph batch."""

    flat = ids.reshape(len(ids), -1)
    out = np.zeros((len(ids), flat.shape[1], vocab), dtype=np.float32)
    np.put_along_axis(out, flat[..., None].astype(np.int64), 1.0, axis=-1)
    return out.reshape(len(ids), -1)


def build_agent(config: AgentConfig, seed: int) -> AgentNet:
    """Deterministically initialized network for ``config``."""

    return AgentNet(config, seed)


def initial_state(net: AgentNet, batch: Optional[int] = None) -> Optional[LSTMState]:
    """Zero LSTM state, or None for a feed-forward agent."""

    if not net.config.lstm:
        return None

    shape = (net.config.lstm_size,) if batch is None else (batch, net.config.lstm_size)
    return LSTMState(Tensor(np.zeros(shape)), Tensor(np.zeros(shape)))


def batch_observations(observations: Sequence[Observation]
                       ) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    crops = np.stack([obs.crop for obs in observations])
    if observations[0].full_map is None:
        return crops, None
    return crops, np.stack([obs.full_map for obs in observations])


def agent_forward(net: AgentNet,
                  obs: Union[Observation, Sequence[Observation]],
                  lstm_state: Optional[LSTMState] = None,
                  record_taps: bool = True) -> AgentOutput:
    """
    Evaluate the network on one observation or a list of them.

    For a single observation the batch axis is dropped: logits have shape
    (n_actions,), the value is a scalar and every tap is a vector. The
    LSTM state must be given exactly when the agent is recurrent.

    :return: logits, value, next LSTM state and post-activation taps.
    """

    single = isinstance(obs, Observation)
    crops, maps = batch_observations([obs] if single else obs)

    if single and lstm_state is not None:
        lstm_state = LSTMState(lstm_state.h.reshape(1, -1), lstm_state.c.reshape(1, -1))

    out = net.forward(crops, maps, lstm_state, record_taps)

    if not single:
        return out

    state = out.state
    if state is not None:
        state = LSTMState(state.h.reshape(-1), state.c.reshape(-1))

    return AgentOutput(out.logits.reshape(-1), out.value.reshape(()), state,
                       {name: tap[0] for name, tap in out.taps.items()})
