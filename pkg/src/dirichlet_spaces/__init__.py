"""Numerical toolkit for Dirichlet-type spaces D(mu) on the unit disk."""

__version__ = "0.1.0"
