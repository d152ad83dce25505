"""Guided CRISPR experiment-design engine."""

__version__ = "0.1.0"
