"""Completely positive extensions of linear maps given on matrix subspaces."""

__version__ = "0.1.0"
