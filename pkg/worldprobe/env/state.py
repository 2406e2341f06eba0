# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import json
from typing import NamedTuple, Optional, Tuple

import numpy as np

from worldprobe.env.config import RoomConfig

__all__ = ["EnvState", "Observation", "StepInfo", "StepResult"]


class EnvState:
    """
    Complete simulator state of one episode.

    Positions are (row, col) canvas coordinates. The state is owned
    by a single caller and is mutated in place by ``step``.
    """

    def __init__(self, config: RoomConfig, grid: np.ndarray,
                 agent_pos: Tuple[int, int], start_pos: Tuple[int, int],
                 goal_pos: Tuple[int, int], monsters: np.ndarray,
                 traps: np.ndarray, rng: np.random.Generator):
        self.config = config
        self.grid = grid
        self.agent_pos = agent_pos
        self.start_pos = start_pos
        self.goal_pos = goal_pos
        self.monsters = monsters
        self.monster_alive = np.ones(len(monsters), dtype=bool)
        self.traps = traps
        self.trap_revealed = np.zeros(len(traps), dtype=bool)
        self.explored = np.zeros(grid.shape, dtype=bool)
        self.steps = 0
        self.done = False
        self.rng = rng

    @property
    def living_monsters(self) -> np.ndarray:
        return self.monsters[self.monster_alive]

    def trap_index(self, pos: Tuple[int, int]) -> Optional[int]:
        hits = np.flatnonzero((self.traps[:, 0] == pos[0]) &
                              (self.traps[:, 1] == pos[1]))
        return int(hits[0]) if len(hits) else None

    def monster_index(self, pos: Tuple[int, int]) -> Optional[int]:
        hits = np.flatnonzero(self.monster_alive &
                              (self.monsters[:, 0] == pos[0]) &
                              (self.monsters[:, 1] == pos[1]))
        return int(hits[0]) if len(hits) else None

    def fingerprint(self) -> bytes:
        """Byte serialization used to compare states for equality."""

        rng_state = json.dumps(self.rng.bit_generator.state, sort_keys=True,
                               default=str)
        parts = [
            self.grid.tobytes(),
            np.asarray(self.agent_pos + self.start_pos + self.goal_pos).tobytes(),
            self.monsters.tobytes(),
            self.monster_alive.tobytes(),
            self.traps.tobytes(),
            self.trap_revealed.tobytes(),
            self.explored.tobytes(),
            str((self.steps, self.done)).encode(),
            rng_state.encode(),
        ]
        return b"|".join(parts)

    def __repr__(self):
        return (f"EnvState(kind={self.config.kind.value}, agent={self.agent_pos},"
                f" goal={self.goal_pos}, steps={self.steps}, done={self.done})")


class Observation(NamedTuple):
    crop: np.ndarray
    full_map: Optional[np.ndarray] = None


class StepInfo(NamedTuple):
    reached_goal: bool = False
    died: bool = False
    timed_out: bool = False
    teleported: bool = False


class StepResult(NamedTuple):
    obs: Observation
    reward: float
    done: bool
    info: StepInfo
