"""Errors raised by concept fitting and probing."""


class ConceptError(Exception):
    """Base exception for concept fitting and probing errors."""
    pass
