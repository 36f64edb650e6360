"""Robust radio-resource management for a single-cell ISAC downlink."""

__version__ = "0.1.0"
