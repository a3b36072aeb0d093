"""Exact angle arithmetic on the eight-element set {0, pi/4, ..., 7pi/4}.

All protocol-visible angles (measurement instructions, preparation rotations,
one-time-memory cell contents) are multiples of pi/4 and must be bit-exact on
the wire.  They are therefore stored as integers counting eighth-turns, and
floats only appear when an angle is handed to the statevector engine.
"""

from __future__ import annotations

import math


class Angle:
    """An angle k * pi/4 with k in 0..7, closed under mod-8 arithmetic."""

    __slots__ = ("eighth_turns",)

    def __init__(self, eighth_turns: int):
        object.__setattr__(self, "eighth_turns", int(eighth_turns) % 8)

    def __setattr__(self, name, value):
        raise AttributeError("Angle is immutable")

    @property
    def radians(self) -> float:
        return self.eighth_turns * math.pi / 4.0

    def __add__(self, other: "Angle") -> "Angle":
        return Angle(self.eighth_turns + other.eighth_turns)

    def __sub__(self, other: "Angle") -> "Angle":
        return Angle(self.eighth_turns - other.eighth_turns)

    def __neg__(self) -> "Angle":
        return Angle(-self.eighth_turns)

    def __eq__(self, other) -> bool:
        return isinstance(other, Angle) and other.eighth_turns == self.eighth_turns

    def __hash__(self) -> int:
        return hash(("Angle", self.eighth_turns))

    def __repr__(self) -> str:
        return f"Angle({self.eighth_turns})"


ZERO = Angle(0)
PI = Angle(4)


def angle_add(a: Angle, b: Angle) -> Angle:
    return a + b


def angle_negate(a: Angle) -> Angle:
    return -a


def angle_add_pi(a: Angle) -> Angle:
    return a + PI


def angle_times_sign(a: Angle, sign_bit: int) -> Angle:
    """(-1)**sign_bit * a, as mod-8 arithmetic."""
    return -a if sign_bit & 1 else a


def angle_pi_times(bit: int) -> Angle:
    """pi * bit for a classical bit (0 or 1)."""
    return PI if bit & 1 else ZERO
