"""Errors raised by the toy data generator."""


class ToyDataError(Exception):
    """Base exception for toy data errors."""
    pass
