"""Optimal-transport confidence weighting with a two-view cost curriculum, for training retrieval encoders on noisy paired data."""

__version__ = "0.1.0"
