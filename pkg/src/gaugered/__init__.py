"""Reduced Poisson structures for particles in gauge fields and the dual Hamiltonian
formulations of the vacuum Maxwell equations, with numerical verification tools."""

__version__ = "0.1.0"
