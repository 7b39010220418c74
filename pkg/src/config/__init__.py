"""
Default configuration values.
"""
