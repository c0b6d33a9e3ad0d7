"""Numerical core: transforms, weights, forms and the individual verifications."""

from . import cascade, dft, hyper, induction, kkt, spectral, weights

__all__ = ["cascade", "dft", "hyper", "induction", "kkt", "spectral", "weights"]
