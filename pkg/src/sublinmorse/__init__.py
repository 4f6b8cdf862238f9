"""Sublinear contraction, Morse directions and random walks on model spaces."""

__version__ = "0.1.0"
