# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Actor-critic network with named activation taps."""

from .config import AgentConfig
from .net import (
    AgentNet,
    AgentOutput,
    LSTMState,
    agent_forward,
    batch_observations,
    build_agent,
    initial_state,
    one_hot_observation,
)
from .policy import (
    ActionMode,
    Frame,
    PolicyStats,
    check_compatible,
    evaluate_policy,
    play_episode,
    select_action,
)
