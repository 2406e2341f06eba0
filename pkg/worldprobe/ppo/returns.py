# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Discounted returns and generalized advantage estimation."""
from typing import Sequence, Tuple, Union

import numpy as np

from worldprobe.exceptions import NonFiniteError, ShapeMismatchError

__all__ = [
    "discounted_return",
    "returns_to_go",
    "compute_gae",
    "normalize_advantages",
]


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """
    Sum of ``gamma**i * rewards[i]``.

    >>> round(discounted_return([1, 1, 1], 0.9), 10)
    2.71
    """

    rewards = np.asarray(rewards, dtype=np.float64)
    if not np.isfinite(rewards).all():
        raise NonFiniteError("Rewards must be finite.")
    return float(np.sum(rewards * gamma ** np.arange(len(rewards))))


def returns_to_go(rewards: Sequence[float], gamma: float) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=np.float64)
    out = np.zeros_like(rewards)
    running = 0.0
    for t in reversed(range(len(rewards))):
        running = rewards[t] + gamma * running
        out[t] = running
    return out


def compute_gae(rewards, values, dones, bootstrap_value: Union[float, np.ndarray],
                gamma: float, lam: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Generalized advantage estimates over a time-major rollout.

    ``dones[t]`` marks that the episode ended with step ``t``; the value of
    the following state is then ignored and the sum stops there.

    :param rewards: shape (T,) or (T, N).
    :param values: value estimates of the visited states, same shape.
    :param dones: episode-end flags, same shape.
    :param bootstrap_value: value of the state after the last step, shape () or (N,).
    :return: advantages and value targets (advantages + values).
    """

    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)

    if rewards.shape != values.shape or rewards.shape != dones.shape:
        raise ShapeMismatchError(
            f"rewards {rewards.shape}, values {values.shape} and dones"
            f" {dones.shape} must have equal shapes.")

    bootstrap = np.broadcast_to(np.asarray(bootstrap_value, dtype=np.float64),
                                rewards.shape[1:])

    advantages = np.zeros_like(rewards)
    running = np.zeros(rewards.shape[1:], dtype=np.float64)
    next_value = bootstrap

    for t in reversed(range(len(rewards))):
        alive = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * alive - values[t]
        running = delta + gamma * lam * alive * running
        advantages[t] = running
        next_value = values[t]

    return advantages, advantages + values


def normalize_advantages(advantages: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    advantages = np.asarray(advantages, dtype=np.float64)
    return (advantages - advantages.mean()) / (advantages.std() + eps)
