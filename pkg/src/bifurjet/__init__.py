"""QUBO jet clustering with simulated bifurcation."""

__version__ = "0.1.0"
