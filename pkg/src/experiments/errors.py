"""Errors raised by the experiment runners."""
from typing import Optional


class ExperimentError(Exception):
    """Base exception for experiment errors; suite failures carry the cell coordinates."""

    def __init__(self, message: str, target: Optional[int] = None, seed: Optional[int] = None):
        super().__init__(message)
        self.target = target
        self.seed = seed
