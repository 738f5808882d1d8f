"""Contour dynamics and complex-contour diagnostics for the periodic Muskat problem."""

__version__ = "0.1.0"
