"""Nested sampling with wrapped and spherical Metropolis proposals."""

__version__ = "0.1.0"
