"""Halfspace depth of planar measures with atoms, and atom recovery from depth."""

__version__ = "0.1.0"
