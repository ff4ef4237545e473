"""Probing-task construction, sentence-encoder evaluation, and stability analytics."""

__version__ = "0.1.0"
