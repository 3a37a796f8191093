"""Simulation toolkit for random walks in random sceneries."""

__version__ = "0.1.0"
