# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Activation/position records and the split protocol applied to them."""
import abc
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from worldprobe.exceptions import (
    ConfigError,
    DimensionMismatchError,
    EmptyDatasetError,
    IndexOutOfRangeError,
    InsufficientRecordsError,
)

__all__ = [
    "ActivationDataset",
    "RecordSink",
    "MemorySink",
    "filter_boundary",
    "split_dataset",
    "chance_level",
    "margin_for_crop",
    "ROOM_SIZE",
]

log = logging.getLogger(__name__)

ROOM_SIZE = 15

_CROP_MARGINS = {9: 0, 5: 2, 3: 1}


def _check_margin(margin: int) -> int:
    if margin not in (0, 1, 2):
        raise ConfigError(f"Boundary margin must be 0, 1 or 2, got {margin}.")
    return margin


def chance_level(margin: int) -> float:
    """
    Accuracy of uniform guessing over the coordinates left by ``margin``.

    >>> round(chance_level(2), 4)
    0.0909
    """

    return 1.0 / (ROOM_SIZE - 2 * _check_margin(margin))


def margin_for_crop(crop_size: int) -> int:
    try:
        return _CROP_MARGINS[crop_size]
    except KeyError:
        raise ConfigError(f"No boundary margin defined for crop {crop_size}.") from None


class ActivationDataset:
    """
    Activation vectors of one tap paired with room-relative positions.

    :param tap: name of the recorded tap.
    :param activations: float array of shape (n, dim).
    :param xs: column offsets within the room, 0..14.
    :param ys: row offsets within the room, 0..14.
    :param margin: boundary margin already applied to the records.
    :param metadata: provenance (map kind, crop size, checkpoint id, seed).
    :param ids: record identities, positions in the collected order by default.
    """

    def __init__(self, tap: str, activations: np.ndarray, xs: np.ndarray,
                 ys: np.ndarray, margin: int = 0,
                 metadata: Optional[Dict[str, Any]] = None,
                 ids: Optional[np.ndarray] = None):
        activations = np.asarray(activations, dtype=np.float32)
        xs = np.asarray(xs, dtype=np.uint8).reshape(-1)
        ys = np.asarray(ys, dtype=np.uint8).reshape(-1)

        if activations.ndim != 2:
            raise DimensionMismatchError(
                f"Activations must be a 2-D array, got shape {activations.shape}.")

        if not len(activations) == len(xs) == len(ys):
            raise DimensionMismatchError(
                f"Got {len(activations)} activations for {len(xs)} x and {len(ys)} y labels.")

        low, high = _check_margin(margin), ROOM_SIZE - 1 - margin
        if len(xs) and (xs.min() < low or xs.max() > high or
                        ys.min() < low or ys.max() > high):
            raise IndexOutOfRangeError(
                f"Coordinates must lie within {low}..{high} for margin {margin}.")

        self.tap = tap
        self.activations = activations
        self.xs = xs
        self.ys = ys
        self.margin = margin
        self.metadata = dict(metadata or {})
        self.ids = (np.arange(len(xs)) if ids is None
                    else np.asarray(ids, dtype=np.int64).reshape(-1))

    def __len__(self):
        return len(self.xs)

    @property
    def dim(self) -> int:
        return self.activations.shape[1]

    def subset(self, index: np.ndarray) -> "ActivationDataset":
        return ActivationDataset(self.tap, self.activations[index], self.xs[index],
                                 self.ys[index], self.margin, self.metadata,
                                 self.ids[index])

    def replace(self, **changes) -> "ActivationDataset":
        fields = dict(tap=self.tap, activations=self.activations, xs=self.xs,
                      ys=self.ys, margin=self.margin, metadata=self.metadata,
                      ids=self.ids)
        fields.update(changes)
        return ActivationDataset(**fields)

    def coverage(self) -> np.ndarray:
        """Record count per (y, x) cell of the room."""

        counts = np.zeros((ROOM_SIZE, ROOM_SIZE), dtype=np.int64)
        np.add.at(counts, (self.ys, self.xs), 1)
        return counts

    def __eq__(self, other):
        if not isinstance(other, ActivationDataset):
            return NotImplemented
        return (self.tap == other.tap and self.margin == other.margin
                and np.array_equal(self.activations, other.activations)
                and np.array_equal(self.xs, other.xs)
                and np.array_equal(self.ys, other.ys))

    def __repr__(self):
        return (f"ActivationDataset(tap={self.tap!r}, n={len(self)},"
                f" dim={self.dim}, margin={self.margin})")


class RecordSink(metaclass=abc.ABCMeta):
    """Destination of the records of one tap, filled block by block."""

    @abc.abstractmethod
    def write(self, start: int, activations: np.ndarray, xs: np.ndarray,
              ys: np.ndarray) -> None:
        """Store records ``start .. start + len(xs)``."""

        raise NotImplementedError()

    @abc.abstractmethod
    def finish(self, metadata: Dict[str, Any]) -> Any:
        raise NotImplementedError()


class MemorySink(RecordSink):
    """Collects records into arrays and finishes with an :class:`ActivationDataset`."""

    def __init__(self, tap: str, count: int, dim: int):
        self.tap = tap
        self.activations = np.zeros((count, dim), dtype=np.float32)
        self.positions = np.zeros((count, 2), dtype=np.uint8)

    def write(self, start, activations, xs, ys):
        stop = start + len(xs)
        self.activations[start:stop] = activations
        self.positions[start:stop, 0] = xs
        self.positions[start:stop, 1] = ys

    def finish(self, metadata: Dict[str, Any]) -> ActivationDataset:
        return ActivationDataset(self.tap, self.activations, self.positions[:, 0],
                                 self.positions[:, 1], metadata=metadata)


def filter_boundary(dataset: ActivationDataset, margin: int) -> ActivationDataset:
    """
    Drop records within ``margin`` cells of any room edge.

    :raises EmptyDatasetError: if no record survives.
    """

    _check_margin(margin)

    low, high = margin, ROOM_SIZE - 1 - margin
    keep = ((dataset.xs >= low) & (dataset.xs <= high) &
            (dataset.ys >= low) & (dataset.ys <= high))

    if not keep.any():
        raise EmptyDatasetError(
            f"No record of tap {dataset.tap!r} survives margin {margin}.")

    if keep.all():
        filtered = dataset.replace(margin=max(margin, dataset.margin))
    else:
        filtered = dataset.subset(np.flatnonzero(keep))
        filtered.margin = max(margin, dataset.margin)

    log.debug(f"Margin {margin} keeps {len(filtered)} of {len(dataset)} records")
    return filtered


def split_dataset(dataset: ActivationDataset, n_train: int = 200_000,
                  n_test: int = 30_000, seed: int = 0,
                  shrink: bool = True) -> Tuple[ActivationDataset, ActivationDataset]:
    """
    Seeded disjoint train/test split.

    With ``shrink`` a dataset smaller than ``n_train + n_test`` is split
    with both counts scaled down in the same ratio.

    :raises InsufficientRecordsError: if the requested counts can not be met.
    """

    wanted = n_train + n_test
    available = len(dataset)

    if available < wanted:
        if not shrink:
            raise InsufficientRecordsError(
                f"Split needs {n_train} + {n_test} records, dataset has {available}.")
        n_train = available * n_train // wanted
        n_test = available * n_test // wanted

    if n_train <= 0 or n_test <= 0:
        raise InsufficientRecordsError(
            f"Dataset of {available} records gives {n_train} train"
            f" and {n_test} test records.")

    order = np.random.default_rng(seed).permutation(available)
    train = dataset.subset(np.sort(order[:n_train]))
    test = dataset.subset(np.sort(order[n_train:n_train + n_test]))

    return train, test
