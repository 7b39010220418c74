"""
Augmentive and projective class artifact compensation maps.
"""
