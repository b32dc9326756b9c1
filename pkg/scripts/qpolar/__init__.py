"""Quantum polar codes: construction, SCL decoding, decisions and simulation."""

__version__ = "0.1.0"
