"""Dissipative driven soft-impact oscillator: quantum Langevin dynamics and chaos diagnostics."""

__version__ = "0.1.0"
