"""
Seeded random streams.

Rng wraps numpy's PCG64 bit generator. Uniform doubles are taken as
(next_uint64 >> 11) * 2**-53, which numpy documents as stable for PCG64, and
Gaussian draws are built from those uniforms with the Box-Muller transform so
that no distribution-specific sampler of the library is involved.
"""
import math
import logging
from typing import Union

import numpy as np

from src.numerics.errors import NumericsError

logger = logging.getLogger(__name__)

_MAX_SEED = 2 ** 64


class Rng:
    """Deterministic random stream; one instance per experiment thread."""

    def __init__(self, seed: int):
        seed = int(seed)
        if seed < 0 or seed >= _MAX_SEED:
            raise NumericsError(f"Seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self._generator = np.random.Generator(np.random.PCG64(seed))

    def spawn(self, *keys: Union[int, str]) -> "Rng":
        """
        Derive an independent child stream.

        The child seed depends only on this stream's seed and the keys, never on
        how many draws were taken, so cells, epochs and steps get stable streams.
        """
        words = [self.seed & 0xFFFFFFFF, self.seed >> 32]
        for key in keys:
            if isinstance(key, str):
                words.extend(key.encode("utf-8"))
            else:
                words.append(int(key) & 0xFFFFFFFF)
        state = np.random.SeedSequence(words).generate_state(2, np.uint32)
        return Rng(int(state[0]) | (int(state[1]) << 32))

    def uniform(self, count: int) -> np.ndarray:
        """Draw count doubles in [0, 1)."""
        return self._generator.random(int(count), dtype=np.float64)

    def gaussian(self, mu: float, sigma: float, count: int) -> np.ndarray:
        """Draw count i.i.d. N(mu, sigma^2) values with Box-Muller."""
        if sigma < 0:
            raise NumericsError(f"sigma must be non-negative, got {sigma}")
        count = int(count)
        if count == 0:
            return np.zeros(0)
        pairs = (count + 1) // 2
        u1 = 1.0 - self.uniform(pairs)  # (0, 1], keeps log finite
        u2 = self.uniform(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * math.pi * u2
        z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:count]
        return mu + sigma * z

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of range(n), ordering n uniform keys."""
        return np.argsort(self.uniform(int(n)), kind="stable")

    def select(self, n: int, k: int) -> np.ndarray:
        """Sorted indices of k distinct elements out of range(n)."""
        if k > n:
            raise NumericsError(f"Cannot select {k} of {n} elements")
        return np.sort(self.permutation(n)[:k])


def gaussian(rng: Rng, mu: float, sigma: float, count: int) -> np.ndarray:
    """count i.i.d. draws from N(mu, sigma^2)."""
    return rng.gaussian(mu, sigma, count)
