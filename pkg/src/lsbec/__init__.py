"""Interacting bosons in a Poisson random landscape: GP energies, particle allocation and BEC diagnostics."""

__version__ = "0.1.0"
