"""Numerical CR geometry: Tanaka-Webster invariants, tractor calculus and the Cartan connection."""

__version__ = "1.0.0"
