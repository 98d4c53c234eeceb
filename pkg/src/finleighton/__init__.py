"""Finite common covers for graphs with fins and graphs of spaces."""
__version__ = "0.1.0"
