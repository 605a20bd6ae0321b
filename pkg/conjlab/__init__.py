"""Desk-scale convex conjugates of log-partition functionals and spectral exponents."""

__version__ = "0.1.0"
