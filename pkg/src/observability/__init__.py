"""
Run metadata and stage metrics.
"""
