"""Sparse recovery of Wigner-D expansions on SO(3)."""

__version__ = "0.1.0"
