"""
ClArC maps.

Both maps replace the v-component of x by the v-component of a reference
mean z and keep the orthogonal complement:

    map(x) = (I - v v^T) x + v v^T z = x - v (v.x - v.z)

with z = z_plus for the augmentive map and z = z_minus for the projective
map. v v^T is never formed as a matrix.
"""
import logging
from dataclasses import dataclass

import numpy as np

from src.config.defaults import CONCEPT_DEFAULTS
from src.clarc.errors import ClarcError
from src.concepts.concept_vector import ConceptVector, HookPoint

logger = logging.getLogger(__name__)

MODES = ("augmentive", "projective")


def _check_direction(x: np.ndarray, v: np.ndarray, z: np.ndarray) -> None:
    if x.shape[-1] != v.size or z.size != v.size:
        raise ClarcError(f"Dimension mismatch: x has {x.shape[-1]}, v has {v.size}, z has {z.size}")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > CONCEPT_DEFAULTS["unit_tolerance"]:
        raise ClarcError(f"Direction must be unit length, got norm {norm}")


def _pin(X: np.ndarray, v: np.ndarray, z: np.ndarray) -> np.ndarray:
    return X - np.multiply.outer(X @ v - v @ z, v)


def aclarc_map(x, v, z_plus) -> np.ndarray:
    """Augmentive map (I - vv^T) x + vv^T z_plus."""
    x, v, z_plus = (np.asarray(a, dtype=np.float64) for a in (x, v, z_plus))
    _check_direction(x, v, z_plus)
    return _pin(x, v, z_plus)


def pclarc_map(x, v, z_minus) -> np.ndarray:
    """Projective map (I - vv^T) x + vv^T z_minus."""
    x, v, z_minus = (np.asarray(a, dtype=np.float64) for a in (x, v, z_minus))
    _check_direction(x, v, z_minus)
    return _pin(x, v, z_minus)


@dataclass(frozen=True, eq=False)
class ClarcHook:
    """A correction map attached at a hook point of a model."""
    mode: str
    concept: ConceptVector
    point: HookPoint

    def __post_init__(self):
        if self.mode not in MODES:
            raise ClarcError(f"Unknown mode: {self.mode}. Must be one of {list(MODES)}")
        if self.concept.hook != self.point:
            raise ClarcError(f"Concept was fitted at {self.concept.hook}, hook sits at {self.point}")

    @classmethod
    def at_concept(cls, mode: str, concept: ConceptVector) -> "ClarcHook":
        return cls(mode=mode, concept=concept, point=concept.hook)

    @property
    def z(self) -> np.ndarray:
        """Reference mean whose v-component the map pins to."""
        return self.concept.z_plus if self.mode == "augmentive" else self.concept.z_minus

    def backward(self, grad: np.ndarray) -> np.ndarray:
        """Vector-Jacobian product of the map: (I - vv^T) grad, per row."""
        flat = grad.reshape(grad.shape[0], -1)
        v = self.concept.v
        return (flat - np.outer(flat @ v, v)).reshape(grad.shape)


def apply_hook_batch(X, hook: ClarcHook) -> np.ndarray:
    """Apply the hook's map to every row; conv-shaped rows are flattened and restored."""
    X = np.asarray(X, dtype=np.float64)
    flat = X.reshape(X.shape[0], -1)
    _check_direction(flat, hook.concept.v, hook.z)
    return _pin(flat, hook.concept.v, hook.z).reshape(X.shape)
