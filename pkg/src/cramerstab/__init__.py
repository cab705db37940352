"""Probability metrics, entropic distance to normality, Gaussian regularisation
and numerical checks of stability inequalities for one-dimensional laws."""

__version__ = "0.1.0"
