"""Errors raised by the model code."""
from typing import Any, Dict, Optional


class ModelError(Exception):
    """Base exception for model errors."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
