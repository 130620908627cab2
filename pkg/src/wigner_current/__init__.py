"""Wigner-current reconstruction and topological-charge analysis for open squeezers."""

__version__ = "0.1.0"
