"""
Filter CAVs, pattern PCAVs, concept means and concept probing.
"""
