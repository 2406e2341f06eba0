# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
from enum import Enum
from typing import Dict, Tuple

from pydantic import BaseModel, root_validator, validator

__all__ = [
    "MapKind",
    "ActionSet",
    "RoomConfig",
    "ACTION_DELTAS",
    "CANVAS_SHAPE",
    "INTERIOR_ORIGIN",
]

CANVAS_SHAPE = (21, 79)
INTERIOR_ORIGIN = (3, 32)


class MapKind(str, Enum):

    RANDOM = "random"
    MONSTER = "monster"
    TRAP = "trap"
    ULTIMATE = "ultimate"


class ActionSet(str, Enum):

    CARDINAL4 = "cardinal4"
    CARDINAL8 = "cardinal8"

    @property
    def n_actions(self) -> int:
        return len(ACTION_DELTAS[self])


# (row, col) deltas: north, east, south, west, then the diagonals
ACTION_DELTAS: Dict[ActionSet, Tuple[Tuple[int, int], ...]] = {
    ActionSet.CARDINAL4: ((-1, 0), (0, 1), (1, 0), (0, -1)),
    ActionSet.CARDINAL8: ((-1, 0), (0, 1), (1, 0), (0, -1),
                          (-1, 1), (1, 1), (1, -1), (-1, -1)),
}

_KIND_DEFAULTS = {
    MapKind.RANDOM: dict(n_monsters=0, n_traps=0, lit=True),
    MapKind.MONSTER: dict(n_monsters=3, n_traps=0, lit=True),
    MapKind.TRAP: dict(n_monsters=0, n_traps=15, lit=True),
    MapKind.ULTIMATE: dict(n_monsters=3, n_traps=15, lit=False),
}


class RoomConfig(BaseModel):
    """
    One of the four 15x15 room variants.

    ``n_monsters``, ``n_traps`` and ``lit`` follow ``kind``
    unless given explicitly.
    """

    kind: MapKind = MapKind.RANDOM
    size: int = 15
    n_monsters: int = 0
    n_traps: int = 0
    lit: bool = True
    max_steps: int = 300
    step_penalty: float = 0.001
    goal_reward: float = 1.0
    action_set: ActionSet = ActionSet.CARDINAL4
    crop_size: int = 5
    full_map: bool = False
    attack_kill_prob: float = 1.0 / 3.0
    light_radius: int = 1

    class Config:
        extra = "forbid"

    @root_validator(pre=True)
    def _kind_defaults(cls, values):
        kind = MapKind(values.get("kind", MapKind.RANDOM))
        for key, value in _KIND_DEFAULTS[kind].items():
            values.setdefault(key, value)
        return values

    @validator("crop_size")
    def _odd_crop(cls, v):
        if v not in (3, 5, 9):
            raise ValueError("crop_size must be one of 3, 5, 9")
        return v

    @validator("size")
    def _fits_canvas(cls, v):
        rows, cols = CANVAS_SHAPE
        top, left = INTERIOR_ORIGIN
        if v < 2 or top + v + 1 > rows or left + v + 1 > cols:
            raise ValueError(f"interior of size {v} does not fit the canvas")
        return v

    @validator("n_monsters", "n_traps", "max_steps", "light_radius")
    def _non_negative(cls, v):
        if v < 0:
            raise ValueError("must be non-negative")
        return v

    @validator("attack_kill_prob")
    def _probability(cls, v):
        if not 0.0 <= v <= 1.0:
            raise ValueError("must be within [0, 1]")
        return v

    @property
    def n_actions(self) -> int:
        return self.action_set.n_actions

    @property
    def canvas_shape(self) -> Tuple[int, int]:
        return CANVAS_SHAPE

    @property
    def origin(self) -> Tuple[int, int]:
        return INTERIOR_ORIGIN
