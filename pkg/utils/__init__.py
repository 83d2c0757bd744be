"""Utility modules for the pixel attribution toolkit."""

__version__ = "0.1.0"
