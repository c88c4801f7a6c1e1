"""Fractional Lindstedt series for degenerate resonant lower-dimensional tori."""

__version__ = "0.1.0"
