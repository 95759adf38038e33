"""Numerical tools for Herman curves of a rational map family and their renormalization."""

__version__ = "0.1.0"
