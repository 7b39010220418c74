"""Errors raised by the numerics primitives."""


class NumericsError(Exception):
    """Base exception for numerics errors."""
    pass
