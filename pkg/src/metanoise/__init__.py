"""Metastability-aware analysis of noisy quantum algorithms."""

__version__ = "0.1.0"
