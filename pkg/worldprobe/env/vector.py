# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import logging
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from worldprobe.env.config import RoomConfig
from worldprobe.env.room import reset, room_position, step
from worldprobe.env.state import EnvState, Observation
from worldprobe.exceptions import WorldProbeError

__all__ = ["RoomVector", "EpisodeStats", "VectorStep"]

log = logging.getLogger(__name__)

_SEED_BOUND = 2**31 - 1


class EpisodeStats(NamedTuple):
    worker: int
    episode_return: float
    length: int
    reached_goal: bool


class VectorStep(NamedTuple):
    observations: List[Observation]
    rewards: np.ndarray
    dones: np.ndarray
    finished: List[EpisodeStats]


class RoomVector:
    """
    A fixed set of independent rooms stepped in lockstep.

    Instance ``i`` draws its episode seeds from a generator seeded with
    ``base_seed + i``; finished episodes are reset automatically.
    """

    def __init__(self, config: RoomConfig, n_envs: int, base_seed: int):
        if n_envs < 1:
            raise ValueError("n_envs must be positive")

        self.config = config
        self.n_envs = n_envs
        self.base_seed = base_seed
        self._seeders = [np.random.default_rng(base_seed + i)
                         for i in range(n_envs)]
        self.states: List[Optional[EnvState]] = [None] * n_envs
        self.observations: List[Optional[Observation]] = [None] * n_envs
        self._returns = np.zeros(n_envs, dtype=np.float64)
        self._lengths = np.zeros(n_envs, dtype=np.int64)

    def _reset_one(self, i: int) -> Observation:
        seed = int(self._seeders[i].integers(_SEED_BOUND))
        self.states[i], self.observations[i] = reset(self.config, seed)
        self._returns[i] = 0.0
        self._lengths[i] = 0
        return self.observations[i]

    def reset(self) -> List[Observation]:
        return [self._reset_one(i) for i in range(self.n_envs)]

    def step(self, actions: Sequence[int]) -> VectorStep:
        """
        Apply one action per instance.

        Errors raised by an instance are re-raised with its index.
        """

        if len(actions) != self.n_envs:
            raise ValueError(f"Expected {self.n_envs} actions, got {len(actions)}")

        rewards = np.zeros(self.n_envs, dtype=np.float64)
        dones = np.zeros(self.n_envs, dtype=bool)
        finished = []

        for i, action in enumerate(actions):
            try:
                result = step(self.states[i], int(action))
            except WorldProbeError as e:
                raise type(e)(f"Worker {i}: {e}") from e

            rewards[i] = result.reward
            dones[i] = result.done
            self._returns[i] += result.reward
            self._lengths[i] += 1
            self.observations[i] = result.obs

            if result.done:
                finished.append(EpisodeStats(i, float(self._returns[i]),
                                             int(self._lengths[i]),
                                             result.info.reached_goal))
                self._reset_one(i)

        return VectorStep(list(self.observations), rewards, dones, finished)

    def crops(self) -> np.ndarray:
        return np.stack([obs.crop for obs in self.observations])

    def full_maps(self) -> Optional[np.ndarray]:
        if not self.config.full_map:
            return None
        return np.stack([obs.full_map for obs in self.observations])

    def positions(self) -> np.ndarray:
        return np.array([room_position(s) for s in self.states], dtype=np.int64)

    def batch(self) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        return self.crops(), self.full_maps()
