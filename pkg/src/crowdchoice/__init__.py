"""Crowd-shipping grocery delivery choice experiments: design, simulation,
hybrid-model estimation, and survey collection."""

__version__ = "0.1.0"
