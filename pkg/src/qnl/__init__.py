"""Nonlocal (Kullback-Leibler) nonlinear Schrodinger equation toolkit."""

__version__ = "0.1.0"
