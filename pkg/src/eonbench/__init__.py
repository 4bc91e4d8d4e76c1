"""Exact and heuristic routing-and-spectrum assignment with an optimality-gap harness."""

__version__ = "0.1.0"
