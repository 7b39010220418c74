import math

import numpy as np
import pytest

from src.concepts.fitting import fit_pattern_cav
from src.numerics.stats import axis_angle_deg, column_mean
from src.toygen.errors import ToyDataError
from src.toygen.toy import (
    CLASS_PATTERN,
    SIGNAL_PATTERN,
    ToyConfig,
    generate_toy,
    noise_pattern,
)


@pytest.mark.unit
class TestToyDataUnit:

    def test_zero_noise_lattice(self):
        """Without noise every sample sits on one of the points (+-1, +-1)."""
        ds = generate_toy(ToyConfig.from_degrees(0.0, sigma2=0.0, n=8))
        assert set(map(tuple, ds.samples.tolist())) <= {(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)}
        assert np.array_equal(ds.samples[:, 0], ds.y_s.astype(float))
        assert np.array_equal(ds.samples[:, 1], ds.y_c.astype(float))

    def test_class_balance_and_artifacts_only_in_a(self):
        ds = generate_toy(ToyConfig.from_degrees(45.0, n=1001, rng_seed=5))
        y_c, y_s = np.asarray(ds.y_c), np.asarray(ds.y_s)
        assert abs(int((y_c == 1).sum()) - int((y_c == -1).sum())) <= 1
        assert np.all(y_s[y_c == 1] == -1)
        in_a = y_s[y_c == -1]
        assert (in_a == 1).any() and (in_a == -1).any()

    def test_residuals_collinear_with_noise_pattern(self):
        """Removing a_s y_s + a_c y_c leaves residuals along a_n."""
        cfg = ToyConfig.from_degrees(135.0, n=500, rng_seed=2)
        ds = generate_toy(cfg)
        residual = (
            ds.samples
            - np.outer(ds.y_s, SIGNAL_PATTERN)
            - np.outer(ds.y_c, CLASS_PATTERN)
        )
        a_n = noise_pattern(cfg.tau)
        cross = residual[:, 0] * a_n[1] - residual[:, 1] * a_n[0]
        assert np.abs(cross).max() < 1e-12

    def test_same_seed_reproduces(self):
        cfg = ToyConfig.from_degrees(45.0, n=200, rng_seed=9)
        assert np.array_equal(generate_toy(cfg).samples, generate_toy(cfg).samples)

    def test_artifact_mean_gap(self):
        """Artifact minus clean mean of class A is close to (2, 0)."""
        ds = generate_toy(ToyConfig.from_degrees(45.0, n=10000, rng_seed=1))
        class_a = ds.select_class(-1)
        gap = column_mean(class_a.samples[class_a.y_s == 1]) - column_mean(class_a.samples[class_a.y_s == -1])
        assert abs(gap[0] - 2.0) < 0.05

    def test_pattern_recovers_signal_axis(self):
        ds = generate_toy(ToyConfig.from_degrees(45.0, sigma2=0.15, n=10000, rng_seed=0))
        class_a = ds.select_class(-1)
        concept = fit_pattern_cav(class_a.samples, class_a.y_s)
        assert axis_angle_deg(concept.v) < 2.0

    @pytest.mark.parametrize("changes", [
        {"sigma2": -0.1},
        {"artifact_fraction_in_A": 0.0},
        {"artifact_fraction_in_A": 1.0},
        {"n": 3},
    ])
    def test_invalid_config(self, changes):
        with pytest.raises(ToyDataError):
            generate_toy(ToyConfig(**changes))

    def test_degrees(self):
        cfg = ToyConfig.from_degrees(45.0)
        assert math.isclose(cfg.tau, math.pi / 4)
        assert math.isclose(cfg.tau_deg, 45.0)
