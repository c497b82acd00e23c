"""Cavity-reflection quantum memory and token acceptance-rate toolkit."""

__version__ = "0.1.0"
