"""Symmetry-aware classical-shadow protocols for the Z2 gauge theory."""

__version__ = "0.1.0"
