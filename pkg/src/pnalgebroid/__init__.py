"""Poisson-Nijenhuis calculus on Lie algebroids, evaluated with exact jets."""

__version__ = "0.1.0"
