"""Simulator for verifiable blind quantum computation on dotted triple-graphs.

Implements the interactive two-party (QYao) protocol and its non-interactive
one-time-memory variant, with a dense statevector engine, a pluggable
adversary harness, and empirical blindness/verifiability experiments.
"""

from .angles import Angle, angle_add, angle_add_pi, angle_negate

__all__ = ["Angle", "angle_add", "angle_add_pi", "angle_negate"]
__version__ = "0.1.0"
