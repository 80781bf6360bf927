"""Simulation toolkit for superlattice Rydberg gates and cluster-state generation."""

__version__ = "0.1.0"
