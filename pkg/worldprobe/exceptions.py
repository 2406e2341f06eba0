# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.

__all__ = [
    "WorldProbeError",
    "ShapeMismatchError",
    "NonFiniteError",
    "IndexOutOfRangeError",
    "InvalidActionError",
    "EpisodeFinishedError",
    "RoomTooSmallError",
    "UnknownTapError",
    "UnknownArchitectureError",
    "EmptyDatasetError",
    "InsufficientRecordsError",
    "DimensionMismatchError",
    "TrainingDivergedError",
    "FormatVersionError",
    "CorruptArtifactError",
    "ConfigError",
    "MissingArtifactError",
]


class WorldProbeError(Exception):
    """Common class for worldprobe exceptions."""


class ShapeMismatchError(WorldProbeError):
    """
    Raises if tensors passed to an operation
    have incompatible shapes.
    """


class NonFiniteError(WorldProbeError):
    """
    Raises if a forward or backward pass
    produced NaN or Inf values.
    """


class IndexOutOfRangeError(WorldProbeError):
    """
    Raises if an integer index (glyph id, class target)
    is outside of the allowed range.
    """


class InvalidActionError(WorldProbeError):
    """
    Raises if an action is not a member
    of the room's action set.
    """


class EpisodeFinishedError(WorldProbeError):
    """
    Raises if step was called on a finished episode.
    Call reset to start a new one.
    """


class RoomTooSmallError(WorldProbeError):
    """
    Raises if the room interior can not hold
    all requested entities on distinct cells.
    """


class UnknownTapError(WorldProbeError):
    """Raises if the requested activation tap does not exist."""


class UnknownArchitectureError(WorldProbeError):
    """Raises if the requested probe architecture is not registered."""


class EmptyDatasetError(WorldProbeError):
    """
    Raises if a dataset operation leaves no records
    or an evaluation is requested on an empty set.
    """


class InsufficientRecordsError(WorldProbeError):
    """
    Raises if a dataset holds fewer records
    than a split requires.
    """


class DimensionMismatchError(WorldProbeError):
    """
    Raises if activation dimensions of a dataset
    and a probe (or two datasets) disagree.
    """


class TrainingDivergedError(WorldProbeError):
    """Raises if a training loss became NaN or Inf."""


class FormatVersionError(WorldProbeError):
    """
    Raises if the loaded artifact version
    does not match the current version
    """


class CorruptArtifactError(WorldProbeError):
    """
    Raises if an artifact file has a wrong magic
    or is truncated.
    """


class ConfigError(WorldProbeError):
    """Raises if an experiment config is inconsistent."""


class MissingArtifactError(WorldProbeError):
    """Raises if an input artifact of a stage does not exist."""
