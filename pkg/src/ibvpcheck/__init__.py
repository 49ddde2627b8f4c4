"""Solver and admissibility checkers for scalar balance laws with boundary data."""

__version__ = "0.1.0"
