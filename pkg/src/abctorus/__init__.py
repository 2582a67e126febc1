"""Computational toolkit for abelian-by-cyclic group actions on the 2-torus."""

__version__ = "0.1.0"
