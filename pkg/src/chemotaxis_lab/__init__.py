"""Desk-scale laboratory for norm discontinuity of a chemotaxis system in critical Besov spaces."""

__version__ = "0.1.0"
