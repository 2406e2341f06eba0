# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import logging
from enum import Enum
from typing import Iterator, NamedTuple, Optional, Tuple, Union

import numpy as np

from worldprobe.agent.net import AgentNet, agent_forward, initial_state
from worldprobe.env import RoomConfig, StepResult, reset, step
from worldprobe.env.room import glyph_canvas
from worldprobe.env.state import EnvState
from worldprobe.exceptions import ConfigError, NonFiniteError
from worldprobe.nn import Tensor, sample_categorical

__all__ = [
    "ActionMode",
    "PolicyStats",
    "Frame",
    "select_action",
    "evaluate_policy",
    "play_episode",
    "check_compatible",
]

log = logging.getLogger(__name__)


class ActionMode(str, Enum):

    SAMPLE = "sample"
    GREEDY = "greedy"


class PolicyStats(NamedTuple):
    episodes: int
    mean_return: float
    mean_length: float
    goal_rate: float
    death_rate: float


class Frame(NamedTuple):
    state: EnvState
    canvas: np.ndarray
    action: Optional[int]
    result: Optional[StepResult]


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def select_action(logits: Union[Tensor, np.ndarray], rng: np.random.Generator,
                  mode: Union[ActionMode, str] = ActionMode.SAMPLE
                  ) -> Tuple[Union[int, np.ndarray], Union[float, np.ndarray]]:
    """
    Pick actions from logits of shape (k,) or (N, k).

    Greedy mode takes the argmax, ties go to the lowest index.

    :return: action(s) and their log-probabilities.
    """

    data = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    data = data.astype(np.float64)

    if not np.isfinite(data).all():
        raise NonFiniteError("Logits must be finite.")

    single = data.ndim == 1
    batch = data.reshape(1, -1) if single else data

    if ActionMode(mode) is ActionMode.GREEDY:
        actions = np.argmax(batch, axis=-1)
        log_probs = _log_softmax(batch)[np.arange(len(batch)), actions]
    else:
        actions, log_probs = sample_categorical(batch, rng)

    if single:
        return int(actions[0]), float(log_probs[0])
    return actions, log_probs


def check_compatible(net: AgentNet, room: RoomConfig) -> None:
    """Raise if ``room`` produces observations ``net`` can not consume."""

    config = net.config
    if config.crop_size != room.crop_size:
        raise ConfigError(
            f"Agent expects a {config.crop_size}x{config.crop_size} crop,"
            f" room renders {room.crop_size}x{room.crop_size}.")
    if config.n_actions != room.n_actions:
        raise ConfigError(
            f"Agent has {config.n_actions} actions, room has {room.n_actions}.")
    if config.use_full_map and not room.full_map:
        raise ConfigError("Agent reads the full map but the room does not render it.")


def play_episode(net: Optional[AgentNet], room: RoomConfig, seed: int,
                 mode: Union[ActionMode, str] = ActionMode.GREEDY
                 ) -> Iterator[Frame]:
    """
    Yield one frame per state of a seeded episode.

    Without a network actions are drawn uniformly at random.
    """

    rng = np.random.default_rng(seed)
    state, obs = reset(room, seed)
    lstm_state = initial_state(net) if net is not None else None

    yield Frame(state, glyph_canvas(state), None, None)

    while not state.done:
        if net is None:
            action = int(rng.integers(room.n_actions))
        else:
            out = agent_forward(net, obs, lstm_state, record_taps=False)
            lstm_state = out.state
            action, _ = select_action(out.logits, rng, mode)

        result = step(state, action)
        obs = result.obs
        yield Frame(state, glyph_canvas(state), action, result)


def evaluate_policy(net: Optional[AgentNet], room: RoomConfig, episodes: int,
                    seed: int, mode: Union[ActionMode, str] = ActionMode.GREEDY
                    ) -> PolicyStats:
    """
    Play ``episodes`` seeded episodes and summarize the outcomes.

    :param net: trained agent, or None for the uniform random policy.
    :param seed: episode ``i`` uses ``seed + i``.
    """

    if net is not None:
        check_compatible(net, room)

    returns, lengths, goals, deaths = [], [], 0, 0

    for episode in range(episodes):
        total, length, last = 0.0, 0, None

        for frame in play_episode(net, room, seed + episode, mode):
            if frame.result is None:
                continue
            total += frame.result.reward
            length += 1
            last = frame.result

        returns.append(total)
        lengths.append(length)
        goals += int(last.info.reached_goal)
        deaths += int(last.info.died)

    stats = PolicyStats(episodes, float(np.mean(returns)), float(np.mean(lengths)),
                        goals / episodes, deaths / episodes)
    log.debug(f"Policy evaluation: {stats}")
    return stats
