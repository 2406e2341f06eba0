# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import logging
from typing import List, Optional

import numpy as np

from worldprobe.agent import AgentNet, LSTMState, initial_state
from worldprobe.env import EpisodeStats, RoomVector
from worldprobe.nn import Tensor, sample_categorical

__all__ = ["TrajectoryBatch", "RolloutCollector", "collect_rollout"]

log = logging.getLogger(__name__)


class TrajectoryBatch:
    """
    Time-major record of one rollout, every array has leading axes (T, N).

    ``starts[t, n]`` is set when the LSTM state was zeroed right before
    step ``t``. ``h0``/``c0`` hold the LSTM state at the first step of
    every BPTT chunk, with shape (T // chunk, N, lstm_size).
    """

    def __init__(self, crops: np.ndarray, maps: Optional[np.ndarray],
                 actions: np.ndarray, log_probs: np.ndarray,
                 values: np.ndarray, rewards: np.ndarray, dones: np.ndarray,
                 starts: np.ndarray, bootstrap_values: np.ndarray,
                 h0: Optional[np.ndarray] = None,
                 c0: Optional[np.ndarray] = None,
                 bptt_chunk: Optional[int] = None,
                 episodes: Optional[List[EpisodeStats]] = None):
        self.crops = crops
        self.maps = maps
        self.actions = actions
        self.log_probs = log_probs
        self.values = values
        self.rewards = rewards
        self.dones = dones
        self.starts = starts
        self.bootstrap_values = bootstrap_values
        self.h0 = h0
        self.c0 = c0
        self.bptt_chunk = bptt_chunk
        self.episodes = episodes or []
        self.advantages: Optional[np.ndarray] = None
        self.value_targets: Optional[np.ndarray] = None

    @property
    def length(self) -> int:
        return self.actions.shape[0]

    @property
    def n_workers(self) -> int:
        return self.actions.shape[1]

    @property
    def n_transitions(self) -> int:
        return self.actions.size

    @property
    def recurrent(self) -> bool:
        return self.h0 is not None

    def __eq__(self, other):
        if not isinstance(other, TrajectoryBatch):
            return NotImplemented

        fields = ("crops", "maps", "actions", "log_probs", "values", "rewards",
                  "dones", "starts", "bootstrap_values", "h0", "c0")
        for name in fields:
            a, b = getattr(self, name), getattr(other, name)
            if (a is None) != (b is None):
                return False
            if a is not None and not np.array_equal(a, b):
                return False
        return self.episodes == other.episodes

    def __repr__(self):
        return (f"TrajectoryBatch(T={self.length}, N={self.n_workers},"
                f" episodes={len(self.episodes)}, recurrent={self.recurrent})")


class RolloutCollector:
    """
    Steps a :class:`RoomVector` with a frozen agent.

    The LSTM state and the current observations carry over from one
    ``collect`` call to the next. Only the first batch starts with every
    ``starts[0]`` set, later ones continue with the dones of the last step.
    """

    def __init__(self, envs: RoomVector, net: AgentNet,
                 rng: np.random.Generator, bptt_chunk: int = 32):
        self.envs = envs
        self.net = net
        self.rng = rng
        self.bptt_chunk = bptt_chunk

        self.envs.reset()
        self.state: Optional[LSTMState] = initial_state(net, envs.n_envs)
        self._starts = np.ones(envs.n_envs, dtype=bool)

    def _forward(self):
        crops, maps = self.envs.batch()
        return crops, maps, self.net.forward(crops, maps, self.state, record_taps=False)

    def collect(self, length: int) -> TrajectoryBatch:
        """
        Run every worker for ``length`` steps.

        :return: the recorded transitions, auto-reset episodes included.
        """

        n = self.envs.n_envs
        recurrent = self.state is not None
        chunk = self.bptt_chunk if recurrent else None

        crops, maps, actions, log_probs, values = [], [], [], [], []
        rewards = np.zeros((length, n), dtype=np.float64)
        dones = np.zeros((length, n), dtype=bool)
        starts = np.zeros((length, n), dtype=bool)
        h0, c0, episodes = [], [], []

        for t in range(length):
            if recurrent and t % chunk == 0:
                h0.append(self.state.h.data.copy())
                c0.append(self.state.c.data.copy())

            step_crops, step_maps, out = self._forward()
            action, log_prob = sample_categorical(out.logits.data, self.rng)

            crops.append(step_crops)
            if step_maps is not None:
                maps.append(step_maps)
            actions.append(action)
            log_probs.append(log_prob)
            values.append(out.value.data.astype(np.float64))
            starts[t] = self._starts

            result = self.envs.step(action)
            rewards[t] = result.rewards
            dones[t] = result.dones
            episodes.extend(result.finished)

            self._starts = result.dones.copy()
            if recurrent:
                keep = (~result.dones).astype(out.state.h.dtype)[:, None]
                self.state = LSTMState(Tensor(out.state.h.data * keep),
                                       Tensor(out.state.c.data * keep))

        _, _, last = self._forward()

        return TrajectoryBatch(
            crops=np.stack(crops),
            maps=np.stack(maps) if maps else None,
            actions=np.stack(actions).astype(np.int64),
            log_probs=np.stack(log_probs),
            values=np.stack(values),
            rewards=rewards,
            dones=dones,
            starts=starts,
            bootstrap_values=last.value.data.astype(np.float64),
            h0=np.stack(h0) if recurrent else None,
            c0=np.stack(c0) if recurrent else None,
            bptt_chunk=chunk,
            episodes=episodes,
        )


def collect_rollout(envs: RoomVector, net: AgentNet, length: int,
                    rng: np.random.Generator, bptt_chunk: int = 32) -> TrajectoryBatch:
    """Reset ``envs`` and collect a single rollout of ``length`` steps per worker."""

    return RolloutCollector(envs, net, rng, bptt_chunk).collect(length)
