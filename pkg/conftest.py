"""Pytest configuration and shared fixtures."""

import sys

import numpy as np
import pytest


def _slow_selected() -> bool:
    """True when the marker expression on the command line asks for slow tests."""
    if '-m' not in sys.argv:
        return False
    position = sys.argv.index('-m')
    if position + 1 >= len(sys.argv):
        return False
    expression = sys.argv[position + 1]
    return 'slow' in expression and 'not slow' not in expression


def pytest_runtest_setup(item):
    """Called before each test is run."""
    # Trend runs train many networks; only run them when asked for by marker
    if any(mark.name == 'slow' for mark in item.iter_markers()):
        if not _slow_selected():
            pytest.skip("Slow trend run (select with -m slow)")


@pytest.fixture
def np_rng():
    """Seeded numpy generator for building oracle inputs."""
    return np.random.default_rng(12345)
