# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""PPO training of the actor-critic agent."""

from .config import PPOConfig
from .returns import (
    compute_gae,
    discounted_return,
    normalize_advantages,
    returns_to_go,
)
from .rollout import RolloutCollector, TrajectoryBatch, collect_rollout
from .losses import (
    LossTerms,
    action_log_probs,
    clipped_surrogate,
    clipped_surrogate_from_ratio,
    ppo_loss,
    value_loss,
)
from .update import minibatches, ppo_update
from .trainer import METRIC_COLUMNS, TrainResult, train
