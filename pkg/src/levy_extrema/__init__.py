"""Distributions of the supremum and infimum of killed Levy processes."""

__version__ = "0.1.0"
