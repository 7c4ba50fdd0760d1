"""Helmholtz decomposition and Calderon-preconditioned scattering on Loop subdivision surfaces."""

__version__ = "0.1.0"
