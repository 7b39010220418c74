"""
From-scratch classifiers with manual backpropagation.
"""
