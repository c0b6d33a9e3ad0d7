"""Numerical verification of log-Sobolev and hypercontractive inequalities on cyclic groups."""

__version__ = "0.1.0"

__all__ = ["__version__"]
