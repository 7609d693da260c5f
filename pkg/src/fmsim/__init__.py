"""Deterministic take-over scenario simulation and misuse evaluation toolkit."""

__version__ = "0.1.0"
