# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Datasets whose probe accuracy is known in advance."""
from enum import Enum

import numpy as np

from worldprobe.probe.dataset import ROOM_SIZE, ActivationDataset

__all__ = [
    "Control",
    "shuffled_labels",
    "noise_like",
    "onehot_positions",
    "apply_control",
]


class Control(str, Enum):

    NONE = "none"
    SHUFFLED = "shuffled"
    NOISE = "noise"


def shuffled_labels(dataset: ActivationDataset, seed: int = 0) -> ActivationDataset:
    """Same activations, positions permuted across records."""

    order = np.random.default_rng(seed).permutation(len(dataset))
    return dataset.replace(xs=dataset.xs[order], ys=dataset.ys[order])


def noise_like(dataset: ActivationDataset, seed: int = 0) -> ActivationDataset:
    """Standard normal activations of the same shape, positions kept."""

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(dataset.activations.shape).astype(np.float32)
    return dataset.replace(activations=noise)


def onehot_positions(n: int, seed: int = 0, margin: int = 0,
                     tap: str = "onehot") -> ActivationDataset:
    """Activations are the one-hot x code followed by the one-hot y code."""

    rng = np.random.default_rng(seed)
    xs = rng.integers(margin, ROOM_SIZE - margin, size=n)
    ys = rng.integers(margin, ROOM_SIZE - margin, size=n)

    activations = np.zeros((n, 2 * ROOM_SIZE), dtype=np.float32)
    activations[np.arange(n), xs] = 1.0
    activations[np.arange(n), ROOM_SIZE + ys] = 1.0

    return ActivationDataset(tap, activations, xs, ys, margin=margin,
                             metadata={"control": "onehot"})


def apply_control(dataset: ActivationDataset, control, seed: int = 0) -> ActivationDataset:
    control = Control(control)
    if control is Control.SHUFFLED:
        return shuffled_labels(dataset, seed)
    if control is Control.NOISE:
        return noise_like(dataset, seed)
    return dataset
