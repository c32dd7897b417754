"""Finite-difference waves on non-uniform grids and their numerical rays."""

__version__ = "0.1.0"
