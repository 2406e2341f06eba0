# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Seeded simulator of the four 15x15 room variants."""

from .config import (
    ACTION_DELTAS,
    CANVAS_SHAPE,
    INTERIOR_ORIGIN,
    ActionSet,
    MapKind,
    RoomConfig,
)
from .glyphs import GLYPH_CHARS, VOCAB_SIZE, Glyph, render_text
from .room import (
    Room,
    free_cells,
    glyph_canvas,
    monster_policy,
    render_observation,
    reset,
    room_position,
    step,
    teleport,
)
from .state import EnvState, Observation, StepInfo, StepResult
from .vector import EpisodeStats, RoomVector, VectorStep
