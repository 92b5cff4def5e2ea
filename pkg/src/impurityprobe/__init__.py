"""Ramsey-spectroscopy toolkit for single-impurity probing of a thermal gas."""

__version__ = "0.1.0"
