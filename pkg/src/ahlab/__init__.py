"""Numerical laboratory for almost-Hermitian conformal geometry."""

__version__ = "0.1.0"
