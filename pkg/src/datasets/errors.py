"""Errors raised by dataset generation, poisoning and I/O."""


class DatasetError(Exception):
    """Base exception for dataset errors."""
    pass
