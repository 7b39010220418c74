"""
Two-dimensional signal/distractor toy data.
"""
