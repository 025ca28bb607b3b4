"""Deterministic multi-agent dynamic scheduling for a flexible flow line."""

__version__ = "0.1.0"
