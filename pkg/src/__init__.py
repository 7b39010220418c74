"""
Pattern concept vectors and class artifact compensation.
"""
