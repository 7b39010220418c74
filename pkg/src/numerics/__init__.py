"""
Deterministic random generation and statistics primitives.
"""
