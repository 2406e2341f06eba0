# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
from typing import NamedTuple

import numpy as np

from worldprobe.nn import Tensor, entropy, log_softmax, minimum

__all__ = [
    "LossTerms",
    "clipped_surrogate_from_ratio",
    "clipped_surrogate",
    "value_loss",
    "action_log_probs",
    "ppo_loss",
]


class LossTerms(NamedTuple):
    total: Tensor
    policy_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float
    approx_kl: float


def clipped_surrogate_from_ratio(ratio: Tensor, advantages: np.ndarray,
                                 clip_eps: float) -> Tensor:
    """Mean of ``min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)``."""

    advantages = np.asarray(advantages, dtype=ratio.dtype)
    unclipped = ratio * advantages
    clipped = ratio.clip(1.0 - clip_eps, 1.0 + clip_eps) * advantages
    return minimum(unclipped, clipped).mean()


def action_log_probs(logits: Tensor, actions: np.ndarray) -> Tensor:
    return log_softmax(logits)[np.arange(len(actions)), actions]


def clipped_surrogate(new_log_probs: Tensor, old_log_probs: np.ndarray,
                      advantages: np.ndarray, clip_eps: float) -> Tensor:
    ratio = (new_log_probs - np.asarray(old_log_probs, dtype=new_log_probs.dtype)).exp()
    return clipped_surrogate_from_ratio(ratio, advantages, clip_eps)


def value_loss(values: Tensor, targets: np.ndarray) -> Tensor:
    return ((values - np.asarray(targets, dtype=values.dtype)) ** 2).mean()


def ppo_loss(logits: Tensor, values: Tensor, actions: np.ndarray,
             old_log_probs: np.ndarray, advantages: np.ndarray,
             targets: np.ndarray, clip_eps: float, value_coef: float,
             entropy_coef: float) -> LossTerms:
    """
    Negated PPO objective for one minibatch.

    ``total = -surrogate + value_coef * value_loss - entropy_coef * entropy``.
    """

    new_log_probs = action_log_probs(logits, actions)
    surrogate = clipped_surrogate(new_log_probs, old_log_probs, advantages, clip_eps)
    v_loss = value_loss(values, targets)
    ent = entropy(logits).mean()

    total = -surrogate + value_coef * v_loss - entropy_coef * ent

    log_ratio = new_log_probs.data.astype(np.float64) - old_log_probs
    clip_fraction = float(np.mean(np.abs(np.exp(log_ratio) - 1.0) > clip_eps))
    approx_kl = float(np.mean(np.exp(log_ratio) - 1.0 - log_ratio))

    return LossTerms(total, -surrogate.item(), v_loss.item(), ent.item(),
                     clip_fraction, approx_kl)
