"""Quasi-periodically perturbed harmonic oscillators: reducibility and norm growth."""

__version__ = "0.1.0"
