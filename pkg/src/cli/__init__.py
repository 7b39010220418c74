"""
Command-line surface binding the modules into reproducible workflows.
"""
