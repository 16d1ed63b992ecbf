"""Selfish bin packing: the Subset Sum heuristic, equilibria and their bounds."""

__version__ = "0.1.0"
