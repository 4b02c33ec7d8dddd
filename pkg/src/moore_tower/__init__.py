"""Exact Postnikov-tower and k-invariant computations for chain complexes and
simplicial modules over Z and Z/m."""

__version__ = "0.1.0"
