"""Nonlocal trace-space machinery and Galerkin solvers for nonlocal Neumann problems."""

__version__ = "0.1.0"
