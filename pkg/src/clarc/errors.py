"""Errors raised by the correction maps and hooks."""


class ClarcError(Exception):
    """Base exception for correction errors."""
    pass
