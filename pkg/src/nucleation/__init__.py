"""Numerical laboratory for multi-well nucleation energy scaling laws."""

__version__ = "0.1.0"
