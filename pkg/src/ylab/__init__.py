"""Pseudospectral laboratory for 2D ideal flows, their viscous and plasma limits."""

__version__ = "0.1.0"
