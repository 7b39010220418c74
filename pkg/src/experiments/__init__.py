"""
Experiment protocols: the controlled poisoning suite and the toy figure.
"""
