# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
from enum import IntEnum

import numpy as np

__all__ = ["Glyph", "GLYPH_CHARS", "VOCAB_SIZE", "render_text"]


class Glyph(IntEnum):
    """
    Glyph ids rendered into observations.

    Hidden traps have no glyph of their own, they render as floor.
    """

    PAD = 0
    UNSEEN = 1
    STONE = 2
    FLOOR = 3
    WALL = 4
    AGENT = 5
    STAIR_UP = 6
    STAIR_DOWN = 7
    MONSTER = 8
    CORPSE = 9
    TRAP_REVEALED = 10

    def __repr__(self):
        return self.name

    def __str__(self):
        return repr(self)


VOCAB_SIZE = len(Glyph)

GLYPH_CHARS = {
    Glyph.PAD: "~",
    Glyph.UNSEEN: " ",
    Glyph.STONE: "`",
    Glyph.FLOOR: ".",
    Glyph.WALL: "#",
    Glyph.AGENT: "@",
    Glyph.STAIR_UP: "<",
    Glyph.STAIR_DOWN: ">",
    Glyph.MONSTER: "M",
    Glyph.CORPSE: "%",
    Glyph.TRAP_REVEALED: "^",
}

_LOOKUP = np.array([GLYPH_CHARS[g] for g in Glyph])


def render_text(grid: np.ndarray) -> str:
    """One character per glyph, one line per row."""

    return "\n".join("".join(row) for row in _LOOKUP[np.asarray(grid)])
