"""Numerical laboratory for Frobenius-norm concentration of sample covariance matrices."""

__version__ = "0.1.0"
