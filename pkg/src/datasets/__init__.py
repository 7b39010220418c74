"""
Synthetic image datasets, artifact injection and poisoning.
"""
