"""Sampling-based motion planning for hybrid dynamical systems."""

__version__ = "0.1.0"
