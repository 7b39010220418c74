"""Errors raised while resolving configuration."""


class ConfigError(Exception):
    """Base exception for configuration errors."""
    pass
