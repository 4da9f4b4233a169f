"""Visionary: hybrid Gaussian-splatting render engine."""

__version__ = "0.1.0"
