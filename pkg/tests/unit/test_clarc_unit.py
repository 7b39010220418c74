import numpy as np
import pytest

from src.clarc.errors import ClarcError
from src.clarc.maps import ClarcHook, aclarc_map, apply_hook_batch, pclarc_map
from src.concepts.concept_vector import INPUT, ConceptVector, HookPoint


def unit(rng, d):
    v = rng.normal(size=d)
    return v / np.linalg.norm(v)


def concept_for(v, z_plus, z_minus, hook=INPUT):
    return ConceptVector(v=v, kind="pattern", raw=v, hook=hook, z_plus=z_plus, z_minus=z_minus)


@pytest.mark.unit
class TestClarcMapsUnit:

    def test_documented_example(self):
        out = pclarc_map([3.0, 4.0], [1.0, 0.0], [0.5, 9.0])
        assert out.tolist() == [0.5, 4.0]

    def test_worked_examples(self):
        assert aclarc_map([1.0, 2.0], [1.0, 0.0], [3.0, 0.0]).tolist() == [3.0, 2.0]
        assert pclarc_map([4.0, 2.0], [1.0, 0.0], [-1.0, 5.0]).tolist() == [-1.0, 2.0]

    def test_random_triples_match_dense_projector(self, np_rng):
        """1000 random (x, v, z) triples up to 256 dimensions."""
        for _ in range(1000):
            d = int(np_rng.integers(1, 257))
            v = unit(np_rng, d)
            z = np_rng.normal(size=d)
            x = np_rng.normal(size=d)
            outer = np.outer(v, v)
            expected = (np.eye(d) - outer) @ x + outer @ z
            assert np.max(np.abs(pclarc_map(x, v, z) - expected)) < 1e-9
            assert np.max(np.abs(aclarc_map(x, v, z) - expected)) < 1e-9

    def test_idempotent(self, np_rng):
        v = unit(np_rng, 8)
        z = np_rng.normal(size=8)
        x = np_rng.normal(size=8)
        once = pclarc_map(x, v, z)
        assert np.allclose(pclarc_map(once, v, z), once, atol=1e-12)

    def test_pins_concept_component(self, np_rng):
        v = unit(np_rng, 8)
        z = np_rng.normal(size=8)
        for _ in range(20):
            x = np_rng.normal(size=8)
            assert abs(v @ aclarc_map(x, v, z) - v @ z) < 1e-12

    def test_dense_projector_oracle(self, np_rng):
        v = unit(np_rng, 16)
        z = np_rng.normal(size=16)
        x = np_rng.normal(size=16)
        projector = np.eye(16) - np.outer(v, v)
        expected = projector @ x + np.outer(v, v) @ z
        assert np.allclose(pclarc_map(x, v, z), expected, atol=1e-12)
        assert np.allclose(aclarc_map(x, v, z), expected, atol=1e-12)

    def test_complement_is_preserved(self, np_rng):
        v = unit(np_rng, 16)
        z = np_rng.normal(size=16)
        x = np_rng.normal(size=16)
        projector = np.eye(16) - np.outer(v, v)
        assert np.allclose(projector @ pclarc_map(x, v, z), projector @ x, atol=1e-12)

    def test_errors(self):
        with pytest.raises(ClarcError, match="Dimension mismatch"):
            pclarc_map([1.0, 2.0, 3.0], [1.0, 0.0], [0.0, 0.0])
        with pytest.raises(ClarcError, match="unit length"):
            pclarc_map([1.0, 2.0], [2.0, 0.0], [0.0, 0.0])


@pytest.mark.unit
class TestClarcHookUnit:

    def test_reference_mean_follows_mode(self):
        concept = concept_for([1.0, 0.0], [2.0, 0.0], [-1.0, 0.0])
        assert ClarcHook.at_concept("augmentive", concept).z.tolist() == [2.0, 0.0]
        assert ClarcHook.at_concept("projective", concept).z.tolist() == [-1.0, 0.0]

    def test_mode_and_point_checked(self):
        concept = concept_for([1.0, 0.0], [2.0, 0.0], [-1.0, 0.0])
        with pytest.raises(ClarcError):
            ClarcHook(mode="suppressive", concept=concept, point=INPUT)
        with pytest.raises(ClarcError):
            ClarcHook(mode="projective", concept=concept, point=HookPoint(1))

    def test_batch_matches_row_loop(self, np_rng):
        v = unit(np_rng, 12)
        concept = concept_for(v, np_rng.normal(size=12), np_rng.normal(size=12))
        hook = ClarcHook.at_concept("projective", concept)
        X = np_rng.normal(size=(5, 12))
        batch = apply_hook_batch(X, hook)
        for i in range(5):
            assert np.allclose(batch[i], pclarc_map(X[i], v, concept.z_minus), atol=1e-12)

    def test_conv_shaped_rows(self, np_rng):
        v = unit(np_rng, 2 * 3 * 3)
        concept = concept_for(v, np_rng.normal(size=18), np_rng.normal(size=18), hook=HookPoint(1))
        hook = ClarcHook.at_concept("augmentive", concept)
        X = np_rng.normal(size=(4, 2, 3, 3))
        out = apply_hook_batch(X, hook)
        assert out.shape == X.shape
        assert np.allclose(out.reshape(4, -1) @ v, np.full(4, v @ concept.z_plus), atol=1e-12)

    def test_backward_is_projector(self, np_rng):
        v = unit(np_rng, 6)
        hook = ClarcHook.at_concept("projective", concept_for(v, np.zeros(6), np.zeros(6)))
        grad = np_rng.normal(size=(3, 6))
        expected = grad @ (np.eye(6) - np.outer(v, v))
        assert np.allclose(hook.backward(grad), expected, atol=1e-12)
