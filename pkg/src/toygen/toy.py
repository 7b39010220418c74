"""
Toy data x = s + d with an artifact signal s = a_s y_s and a distractor
d = a_c y_c + a_n eps.

Class A is y_c = -1, class B is y_c = +1. Only class A carries the artifact:
a fraction of its samples has y_s = +1, every other sample has y_s = -1.
"""
import math
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.config.defaults import TOY_DEFAULTS
from src.datasets.dataset import LabeledDataset
from src.numerics.rng import Rng
from src.toygen.errors import ToyDataError

logger = logging.getLogger(__name__)

SIGNAL_PATTERN = np.array([1.0, 0.0])   # a_s, the artifact direction
CLASS_PATTERN = np.array([0.0, 1.0])    # a_c


def noise_pattern(tau: float) -> np.ndarray:
    """a_n = (sin tau, cos tau)."""
    return np.array([math.sin(tau), math.cos(tau)])


@dataclass(frozen=True)
class ToyConfig:
    """Parameters of one toy dataset; tau is in radians."""
    tau: float = 0.0
    sigma2: float = TOY_DEFAULTS["sigma2"]
    n: int = TOY_DEFAULTS["n"]
    artifact_fraction_in_A: float = TOY_DEFAULTS["artifact_fraction_in_A"]
    rng_seed: int = TOY_DEFAULTS["rng_seed"]

    @classmethod
    def from_degrees(cls, tau_deg: float, **kwargs) -> "ToyConfig":
        return cls(tau=math.radians(tau_deg), **kwargs)

    @property
    def tau_deg(self) -> float:
        return math.degrees(self.tau)

    def validate(self) -> None:
        if self.sigma2 < 0:
            raise ToyDataError(f"sigma2 must be non-negative, got {self.sigma2}")
        if not 0 < self.artifact_fraction_in_A < 1:
            raise ToyDataError(
                f"artifact_fraction_in_A must lie in (0, 1), got {self.artifact_fraction_in_A}"
            )
        if self.n < 4:
            raise ToyDataError(f"n must be at least 4, got {self.n}")


def _labels(cfg: ToyConfig) -> Tuple[np.ndarray, np.ndarray]:
    n_a = (cfg.n + 1) // 2
    n_b = cfg.n - n_a
    n_artifact = int(round(cfg.artifact_fraction_in_A * n_a))
    n_artifact = min(max(n_artifact, 1), n_a - 1)
    y_c = np.concatenate([-np.ones(n_a), np.ones(n_b)]).astype(np.int64)
    y_s = -np.ones(cfg.n, dtype=np.int64)
    y_s[:n_artifact] = 1
    return y_c, y_s


def generate_toy(cfg: ToyConfig) -> LabeledDataset:
    """Draw the toy dataset described by cfg."""
    cfg.validate()
    rng = Rng(cfg.rng_seed)
    y_c, y_s = _labels(cfg)
    order = rng.permutation(cfg.n)
    y_c, y_s = y_c[order], y_s[order]
    eps = rng.gaussian(0.0, math.sqrt(cfg.sigma2), cfg.n)
    samples = (
        np.outer(y_s, SIGNAL_PATTERN)
        + np.outer(y_c, CLASS_PATTERN)
        + np.outer(eps, noise_pattern(cfg.tau))
    )
    logger.debug(
        f"Generated toy data: tau={cfg.tau_deg:.1f} deg, n={cfg.n}, "
        f"artifacts={int((y_s == 1).sum())}"
    )
    return LabeledDataset(
        samples=samples,
        y_c=y_c,
        y_s=y_s,
        split="train",
        num_classes=2,
        provenance=({
            "step": "generate_toy",
            "tau": cfg.tau,
            "sigma2": cfg.sigma2,
            "n": cfg.n,
            "artifact_fraction_in_A": cfg.artifact_fraction_in_A,
            "rng_seed": cfg.rng_seed,
        },),
    )
