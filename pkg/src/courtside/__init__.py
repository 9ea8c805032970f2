"""Interpretable analytics for tabular sports statistics."""

__version__ = "0.1.0"
