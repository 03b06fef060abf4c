"""Exact and simulated dynamics for the fixed-magnetization Ising model."""

__version__ = "0.1.0"
