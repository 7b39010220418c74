"""
Concept vectors and the hook points they live at.
"""
import re
import logging
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from src.concepts.errors import ConceptError
from src.config.defaults import CONCEPT_DEFAULTS
from src.numerics.serialization import dumps_json, loads_json

logger = logging.getLogger(__name__)

CONCEPT_KINDS = ("filter", "pattern")
LABEL_SOURCES = ("ground_truth", "predicted")

_LAYER_NAME = re.compile(r"^(?:layer|after_layer\()(\d+)\)?$")


@dataclass(frozen=True)
class HookPoint:
    """Where features are read or rewritten: the input (layer 0) or after the k-th layer."""
    layer: int = 0

    def __post_init__(self):
        if self.layer < 0:
            raise ConceptError(f"Invalid hook layer {self.layer}")

    @classmethod
    def parse(cls, text: str) -> "HookPoint":
        """Accepts 'input', 'layerK' and 'after_layer(K)'."""
        text = str(text).strip()
        if text == "input":
            return cls(0)
        match = _LAYER_NAME.match(text)
        if not match:
            raise ConceptError(f"Unknown hook point: {text}")
        return cls(int(match.group(1)))

    @property
    def is_input(self) -> bool:
        return self.layer == 0

    @property
    def short_name(self) -> str:
        return "input" if self.is_input else f"layer{self.layer}"

    def __str__(self) -> str:
        return "input" if self.is_input else f"after_layer({self.layer})"


INPUT = HookPoint(0)


def _readonly(values) -> np.ndarray:
    array = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ConceptVector:
    """
    A unit concept direction v with its raw estimate and the artifact (z_plus)
    and clean (z_minus) means of the affected class.
    """
    v: np.ndarray
    kind: str
    raw: np.ndarray
    hook: HookPoint
    z_plus: np.ndarray
    z_minus: np.ndarray
    fit_meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("v", "raw", "z_plus", "z_minus"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if self.kind not in CONCEPT_KINDS:
            raise ConceptError(f"Unknown concept kind: {self.kind}")
        norm = float(np.linalg.norm(self.v))
        if abs(norm - 1.0) > CONCEPT_DEFAULTS["unit_tolerance"]:
            raise ConceptError(f"Concept direction must be unit length, got norm {norm}")
        dim = self.v.size
        if self.raw.size != dim or self.z_plus.size != dim or self.z_minus.size != dim:
            raise ConceptError("Concept vector fields disagree in dimension")

    @property
    def dim(self) -> int:
        return self.v.size

    @property
    def label_source(self) -> str:
        return self.fit_meta.get("label_source", "ground_truth")

    def mean_gap(self) -> float:
        """|z_plus - z_minus|, the default probe scale."""
        return float(np.linalg.norm(self.z_plus - self.z_minus))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "hook": str(self.hook),
            "dim": self.dim,
            "v": self.v.tolist(),
            "raw": self.raw.tolist(),
            "z_plus": self.z_plus.tolist(),
            "z_minus": self.z_minus.tolist(),
            "fit_meta": dict(self.fit_meta),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ConceptVector":
        try:
            concept = cls(
                v=data["v"],
                kind=data["kind"],
                raw=data["raw"],
                hook=HookPoint.parse(data["hook"]),
                z_plus=data["z_plus"],
                z_minus=data["z_minus"],
                fit_meta=dict(data.get("fit_meta", {})),
            )
        except KeyError as e:
            raise ConceptError(f"Concept file is missing field {e}")
        if concept.dim != int(data.get("dim", concept.dim)):
            raise ConceptError(f"Concept file declares dim {data['dim']} but holds {concept.dim} values")
        return concept


def save_concept(concept: ConceptVector, path: str) -> None:
    with open(path, "w") as f:
        f.write(dumps_json(concept.to_dict()))


def load_concept(path: str) -> ConceptVector:
    with open(path) as f:
        return ConceptVector.from_dict(loads_json(f.read()))
