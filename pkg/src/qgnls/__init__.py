"""Numerical tools for stationary NLS states on noncompact metric graphs."""

__version__ = "0.1.0"
