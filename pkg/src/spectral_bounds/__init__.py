"""Numerical spectral geometry: Laplace eigenvalues of planar domains and
model surfaces, geometric invariants, and checks of eigenvalue inequalities."""

__version__ = "0.1.0"
