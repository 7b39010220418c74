import math

import numpy as np
import pytest

from src.numerics.errors import NumericsError
from src.numerics.rng import Rng, gaussian
from src.numerics.serialization import dumps_json, format_float, loads_json
from src.numerics.stats import (
    axis_angle_deg,
    column_mean,
    cosine_similarity,
    covariance_with_target,
    softmax,
    variance_of_target,
)


@pytest.mark.unit
class TestRngUnit:

    def test_same_seed_same_stream(self):
        """Two streams with one seed produce identical draws."""
        a, b = Rng(42), Rng(42)
        assert np.array_equal(a.uniform(100), b.uniform(100))
        assert np.array_equal(a.gaussian(0.0, 1.0, 7), b.gaussian(0.0, 1.0, 7))

    def test_uniform_range(self):
        """Uniform draws lie in [0, 1)."""
        u = Rng(1).uniform(10000)
        assert u.min() >= 0.0
        assert u.max() < 1.0

    def test_spawn_is_independent_of_draw_count(self):
        """Child streams depend only on the parent seed and the keys."""
        fresh = Rng(7)
        used = Rng(7)
        used.uniform(1000)
        assert np.array_equal(fresh.spawn("cell", 3).uniform(5), used.spawn("cell", 3).uniform(5))
        assert not np.array_equal(fresh.spawn("cell", 3).uniform(5), fresh.spawn("cell", 4).uniform(5))

    def test_gaussian_moments(self):
        """Box-Muller draws have the requested mean and standard deviation."""
        z = gaussian(Rng(3), 2.0, 0.5, 200000)
        assert abs(z.mean() - 2.0) < 0.01
        assert abs(z.std() - 0.5) < 0.01

    def test_gaussian_odd_count_and_zero_sigma(self):
        """Odd counts are honoured and sigma = 0 returns the mean."""
        assert Rng(0).gaussian(0.0, 1.0, 5).shape == (5,)
        assert np.all(Rng(0).gaussian(1.5, 0.0, 4) == 1.5)

    def test_gaussian_rejects_negative_sigma(self):
        with pytest.raises(NumericsError):
            Rng(0).gaussian(0.0, -1.0, 3)

    def test_permutation_and_select(self):
        """Permutations cover range(n); select returns sorted distinct indices."""
        rng = Rng(11)
        perm = rng.permutation(50)
        assert sorted(perm.tolist()) == list(range(50))
        picked = rng.select(50, 10)
        assert picked.tolist() == sorted(set(picked.tolist()))
        assert len(picked) == 10
        with pytest.raises(NumericsError):
            rng.select(3, 4)

    def test_seed_range(self):
        """Seeds must fit an unsigned 64-bit integer."""
        Rng(2 ** 64 - 1)
        with pytest.raises(NumericsError):
            Rng(-1)
        with pytest.raises(NumericsError):
            Rng(2 ** 64)


@pytest.mark.unit
class TestStatsUnit:

    def test_column_mean(self):
        assert np.allclose(column_mean([[1.0, 2.0], [3.0, 6.0]]), [2.0, 4.0])
        with pytest.raises(NumericsError, match="empty input"):
            column_mean(np.zeros((0, 3)))

    def test_covariance_matches_oracle(self, np_rng):
        """Covariance with the 1/n convention matches numpy's biased estimate."""
        X = np_rng.normal(size=(40, 5))
        y = np.sign(np_rng.normal(size=40))
        expected = np.array([np.cov(X[:, j], y, bias=True)[0, 1] for j in range(5)])
        assert np.allclose(covariance_with_target(X, y), expected, atol=1e-12)
        assert math.isclose(variance_of_target(y), float(np.var(y)), abs_tol=1e-12)

    def test_degenerate_sample(self):
        with pytest.raises(NumericsError, match="degenerate sample"):
            covariance_with_target([[1.0, 2.0]], [1.0])
        with pytest.raises(NumericsError, match="degenerate sample"):
            variance_of_target([1.0])

    def test_cosine_similarity(self):
        assert cosine_similarity([1.0, 0.0], [2.0, 0.0]) == 1.0
        assert cosine_similarity([1.0, 0.0], [-3.0, 0.0]) == -1.0
        assert abs(cosine_similarity([1.0, 0.0], [0.0, 5.0])) < 1e-15
        with pytest.raises(NumericsError, match="zero vector"):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_axis_angle(self):
        assert axis_angle_deg([1.0, 0.0]) == 0.0
        assert math.isclose(axis_angle_deg([1.0, 1.0]), 45.0)
        assert math.isclose(axis_angle_deg([-1.0, 0.0]), 180.0)

    def test_softmax_rows_sum_to_one(self, np_rng):
        p = softmax(np_rng.normal(size=(6, 4)) * 50)
        assert np.allclose(p.sum(axis=1), 1.0)
        assert np.all(p >= 0)


@pytest.mark.unit
class TestSerializationUnit:

    def test_format_float_round_trips(self, np_rng):
        """17 significant digits reproduce every float64 bit for bit."""
        for value in np_rng.normal(size=50) * 10.0 ** np_rng.integers(-20, 20, size=50):
            assert float(format_float(value)) == value
        assert format_float(1.0) == "1.0"

    def test_format_float_rejects_non_finite(self):
        with pytest.raises(NumericsError):
            format_float(float("nan"))

    def test_dumps_json_is_deterministic(self):
        data = {"b": [0.1, 2, 3.5], "a": {"x": True, "y": None}, "s": "text"}
        text = dumps_json(data)
        assert text == dumps_json(data)
        assert text.endswith("\n")
        assert '"b": [0.10000000000000001, 2, 3.5]' in text
        assert loads_json(text) == data
        # Keys keep insertion order
        assert text.index('"b"') < text.index('"a"')
