"""Numerics for shifted convolution L-series of level-one cusp forms via harmonic Maass forms."""

__version__ = "0.1.0"
