"""Analog Matching of colored Gaussian sources to colored Gaussian channels."""

__version__ = "0.1.0"
