"""Desk-scale laboratory for nonlocal games, anchoring and parallel repetition."""

__version__ = "0.1.0"
