"""Robust route planning for sidewalk delivery robots."""

__version__ = "0.1.0"
