"""Toolkit for constraint-guided code-switched text generation and evaluation."""

__version__ = "0.1.0"
