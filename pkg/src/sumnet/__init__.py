"""Solvability of three-source sum-networks through region decomposition."""

__version__ = "0.1.0"
