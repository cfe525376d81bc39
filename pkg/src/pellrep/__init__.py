"""Pell-Lucas numbers that are concatenations of two repdigits."""

__version__ = "0.1.0"
