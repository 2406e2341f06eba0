# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""
Seeded simulator of the 15x15 room variants.

The room interior is anchored at canvas (3, 32) and surrounded by a
one-cell wall ring; everything else on the 21x79 canvas is stone.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np

from worldprobe.env.config import ACTION_DELTAS, RoomConfig
from worldprobe.env.glyphs import Glyph, render_text
from worldprobe.env.state import EnvState, Observation, StepInfo, StepResult
from worldprobe.exceptions import (
    EpisodeFinishedError,
    InvalidActionError,
    RoomTooSmallError,
)

__all__ = [
    "reset",
    "step",
    "monster_policy",
    "render_observation",
    "glyph_canvas",
    "room_position",
    "free_cells",
    "teleport",
    "Room",
]

log = logging.getLogger(__name__)

_NEIGHBOURS = ((-1, -1), (-1, 0), (-1, 1), (0, -1),
               (0, 1), (1, -1), (1, 0), (1, 1))


def _chebyshev(a, b) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def _manhattan(a, b) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def _in_interior(config: RoomConfig, pos) -> bool:
    top, left = config.origin
    return (top <= pos[0] < top + config.size and
            left <= pos[1] < left + config.size)


def _light(state: EnvState) -> None:
    r = state.config.light_radius
    row, col = state.agent_pos
    rows, cols = state.grid.shape
    state.explored[max(row - r, 0):min(row + r + 1, rows),
                   max(col - r, 0):min(col + r + 1, cols)] = True


def reset(config: RoomConfig, seed: int) -> Tuple[EnvState, Observation]:
    """
    Build a fresh room and place every entity on a distinct floor cell.

    :param config: room variant.
    :param seed: seed of the episode generator.
    :return: initial state and its observation.
    """

    rng = np.random.default_rng(seed)
    top, left = config.origin
    size = config.size

    grid = np.full(config.canvas_shape, Glyph.STONE, dtype=np.uint8)
    grid[top - 1:top + size + 1, left - 1:left + size + 1] = Glyph.WALL
    grid[top:top + size, left:left + size] = Glyph.FLOOR

    n_entities = 2 + config.n_monsters + config.n_traps
    if n_entities > size * size:
        raise RoomTooSmallError(
            f"{n_entities} entities do not fit into a {size}x{size} room.")

    cells = rng.choice(size * size, size=n_entities, replace=False)
    coords = np.stack(np.divmod(cells, size), axis=1) + np.array([top, left])

    start = (int(coords[0, 0]), int(coords[0, 1]))
    goal = (int(coords[1, 0]), int(coords[1, 1]))
    monsters = coords[2:2 + config.n_monsters].astype(np.int64)
    traps = coords[2 + config.n_monsters:].astype(np.int64)

    grid[start] = Glyph.STAIR_UP
    grid[goal] = Glyph.STAIR_DOWN

    state = EnvState(config, grid, start, start, goal,
                     monsters.reshape(-1, 2), traps.reshape(-1, 2), rng)

    if config.lit:
        state.explored[top - 1:top + size + 1, left - 1:left + size + 1] = True
    _light(state)

    return state, render_observation(state)


def free_cells(state: EnvState) -> List[Tuple[int, int]]:
    """Interior cells holding neither a trap nor a living monster."""

    top, left = state.config.origin
    size = state.config.size

    occupied = np.zeros((size, size), dtype=bool)
    for row, col in state.traps:
        occupied[row - top, col - left] = True
    for row, col in state.living_monsters:
        occupied[row - top, col - left] = True

    rows, cols = np.nonzero(~occupied)
    return [(int(r) + top, int(c) + left) for r, c in zip(rows, cols)]


def teleport(state: EnvState) -> Tuple[int, int]:
    """Move the agent to a uniformly drawn free cell."""

    cells = free_cells(state)
    state.agent_pos = cells[int(state.rng.integers(len(cells)))]
    return state.agent_pos


def step(state: EnvState, action: int) -> StepResult:
    """
    Advance the episode by one agent action.

    Blocked moves still cost a step. Moving into a monster kills it and
    leaves a corpse; moving onto a trap reveals it and teleports the agent.
    Living monsters act after the agent unless the goal was reached.
    """

    config = state.config

    if state.done:
        raise EpisodeFinishedError("Episode is finished, call reset.")

    deltas = ACTION_DELTAS[config.action_set]
    if isinstance(action, bool) or not isinstance(action, (int, np.integer)) \
            or not 0 <= action < len(deltas):
        raise InvalidActionError(
            f"Action {action!r} is not in {config.action_set.value}"
            f" (0..{len(deltas) - 1}).")

    d_row, d_col = deltas[int(action)]
    target = (state.agent_pos[0] + d_row, state.agent_pos[1] + d_col)
    teleported = False

    if _in_interior(config, target):
        victim = state.monster_index(target)

        if victim is not None:
            state.monster_alive[victim] = False
            if state.grid[target] == Glyph.FLOOR:
                state.grid[target] = Glyph.CORPSE
        else:
            state.agent_pos = target
            trap = state.trap_index(target)

            if trap is not None:
                state.trap_revealed[trap] = True
                teleport(state)
                teleported = True

    _light(state)

    reward = -config.step_penalty
    reached_goal = state.agent_pos == state.goal_pos
    died = False

    if reached_goal:
        reward += config.goal_reward
    else:
        died = monster_policy(state)

    state.steps += 1
    timed_out = (state.steps >= config.max_steps and
                 not reached_goal and not died)
    state.done = reached_goal or died or state.steps >= config.max_steps

    info = StepInfo(reached_goal=reached_goal, died=died,
                    timed_out=timed_out, teleported=teleported)

    return StepResult(render_observation(state), reward, state.done, info)


def monster_policy(state: EnvState) -> bool:
    """
    Let every living monster act once.

    A monster adjacent to the agent attacks and kills it with
    ``attack_kill_prob``; any other monster steps to the neighbour closest
    to the agent (Chebyshev, then Manhattan, then a seeded random choice).

    :return: whether the agent died.
    """

    config = state.config
    agent = state.agent_pos

    for index in np.flatnonzero(state.monster_alive):
        pos = (int(state.monsters[index, 0]), int(state.monsters[index, 1]))

        if _chebyshev(pos, agent) <= 1:
            if state.rng.random() < config.attack_kill_prob:
                log.debug(f"Monster {index} killed the agent at {agent}")
                return True
            continue

        current = (_chebyshev(pos, agent), _manhattan(pos, agent))
        best_key, best = current, []

        for d_row, d_col in _NEIGHBOURS:
            cell = (pos[0] + d_row, pos[1] + d_col)

            if (not _in_interior(config, cell) or cell == agent
                    or state.trap_index(cell) is not None
                    or state.monster_index(cell) is not None):
                continue

            key = (_chebyshev(cell, agent), _manhattan(cell, agent))
            if key < best_key:
                best_key, best = key, [cell]
            elif key == best_key and best:
                best.append(cell)

        if best:
            choice = best[0] if len(best) == 1 else \
                best[int(state.rng.integers(len(best)))]
            state.monsters[index] = choice

    return False


def glyph_canvas(state: EnvState) -> np.ndarray:
    """Glyphs of the whole canvas as the agent perceives them."""

    config = state.config
    view = state.grid.copy()

    revealed = state.traps[state.trap_revealed]
    view[revealed[:, 0], revealed[:, 1]] = Glyph.TRAP_REVEALED

    monsters = state.living_monsters

    if not config.lit:
        view[~state.explored] = Glyph.UNSEEN
        row, col = state.agent_pos
        r = config.light_radius
        in_light = ((np.abs(monsters[:, 0] - row) <= r) &
                    (np.abs(monsters[:, 1] - col) <= r))
        monsters = monsters[in_light]

    view[monsters[:, 0], monsters[:, 1]] = Glyph.MONSTER
    view[state.agent_pos] = Glyph.AGENT

    return view


def render_observation(state: EnvState,
                       config: Optional[RoomConfig] = None) -> Observation:
    """
    Agent-centred k x k crop, plus the full canvas when configured.

    Crop cells beyond the canvas are pad.
    """

    config = config or state.config
    view = glyph_canvas(state)

    k = config.crop_size
    r = k // 2
    padded = np.pad(view, r, constant_values=Glyph.PAD)
    row, col = state.agent_pos
    crop = padded[row:row + k, col:col + k].copy()

    return Observation(crop=crop, full_map=view if config.full_map else None)


def room_position(state: EnvState) -> Tuple[int, int]:
    """Agent position as (x, y) relative to the interior's top-left cell."""

    top, left = state.config.origin
    return state.agent_pos[1] - left, state.agent_pos[0] - top


class Room:
    """Stateful convenience wrapper around ``reset`` and ``step``."""

    def __init__(self, config: RoomConfig):
        self.config = config
        self.state: Optional[EnvState] = None

    def reset(self, seed: int) -> Observation:
        self.state, obs = reset(self.config, seed)
        return obs

    def step(self, action: int) -> StepResult:
        if self.state is None:
            raise EpisodeFinishedError("Room was never reset.")
        return step(self.state, action)

    @property
    def position(self) -> Tuple[int, int]:
        return room_position(self.state)

    def render(self) -> str:
        return render_text(glyph_canvas(self.state))
