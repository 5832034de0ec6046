"""Oseen fundamental solutions, vorticity wake asymptotes and their numerical checks."""

__version__ = "0.1.0"
