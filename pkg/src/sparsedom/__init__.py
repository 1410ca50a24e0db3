"""Dyadic-grid numerics for sparse domination of rough commutator-type singular integrals."""

__version__ = "0.1.0"
