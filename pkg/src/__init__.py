"""Minimum-rate capacity regions of energy harvesting multiple-access channels."""

__version__ = "0.1.0"
