"""
Dataset and artifact types.
"""
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.datasets.errors import DatasetError

logger = logging.getLogger(__name__)

SPLITS = ("train", "test")
ARTIFACT_KINDS = ("color_tint", "box_patch", "additive_shift")


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ArtifactSpec:
    """Parametric artifact applied to image samples."""
    kind: str
    color_index: int = 0
    box_size: int = 4
    value: float = 1.0
    template: Optional[np.ndarray] = None
    factor: float = 0.2
    clamp_range: Tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.kind not in ARTIFACT_KINDS:
            raise DatasetError(f"Unknown artifact kind: {self.kind}. Must be one of {list(ARTIFACT_KINDS)}")
        if self.kind == "additive_shift":
            if self.template is None:
                raise DatasetError("additive_shift requires a template tensor")
            object.__setattr__(self, "template", _frozen(np.asarray(self.template, dtype=np.float64)))
        if self.clamp_range[0] > self.clamp_range[1]:
            raise DatasetError(f"Invalid clamp range {self.clamp_range}")

    def describe(self) -> Dict[str, Any]:
        """Plain-data summary for provenance records."""
        summary: Dict[str, Any] = {"kind": self.kind}
        if self.kind == "color_tint":
            summary["color_index"] = self.color_index
        elif self.kind == "box_patch":
            summary.update(box_size=self.box_size, value=self.value)
        else:
            summary.update(factor=self.factor, template_sum=float(self.template.sum()))
        summary["clamp_range"] = list(self.clamp_range)
        return summary


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """
    Samples with class labels, artifact flags and a split tag.

    samples is n x d; channel_shape records (C, H, W) for image data and is
    None for plain feature vectors. y_s is +1 exactly for samples that carry
    an artifact. Arrays are read-only; transformations return new datasets.
    """
    samples: np.ndarray
    y_c: np.ndarray
    y_s: np.ndarray
    split: str = "train"
    num_classes: int = 2
    channel_shape: Optional[Tuple[int, int, int]] = None
    provenance: Tuple[Dict[str, Any], ...] = field(default_factory=tuple)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples.reshape(-1, 1)
        elif samples.ndim > 2:
            samples = samples.reshape(samples.shape[0], -1)
        y_c = np.asarray(self.y_c, dtype=np.int64).reshape(-1)
        y_s = np.asarray(self.y_s, dtype=np.int8).reshape(-1)
        n = samples.shape[0]
        if y_c.shape[0] != n or y_s.shape[0] != n:
            raise DatasetError(
                f"Label lengths ({y_c.shape[0]}, {y_s.shape[0]}) do not match {n} samples"
            )
        if not np.all(np.isin(y_s, (-1, 1))):
            raise DatasetError("Artifact flags must be -1 or +1")
        if self.split not in SPLITS:
            raise DatasetError(f"Unknown split: {self.split}")
        if self.channel_shape is not None:
            shape = tuple(int(s) for s in self.channel_shape)
            if len(shape) != 3 or int(np.prod(shape)) != samples.shape[1]:
                raise DatasetError(f"Channel shape {shape} does not match sample dimension {samples.shape[1]}")
            object.__setattr__(self, "channel_shape", shape)
        object.__setattr__(self, "samples", _frozen(samples))
        object.__setattr__(self, "y_c", _frozen(y_c))
        object.__setattr__(self, "y_s", _frozen(y_s))
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def images(self) -> np.ndarray:
        """Samples as an (n, C, H, W) array."""
        if self.channel_shape is None:
            raise DatasetError("Dataset has no channel shape")
        return self.samples.reshape((self.n,) + self.channel_shape)

    def class_counts(self) -> Dict[int, int]:
        """Histogram of class labels."""
        labels, counts = np.unique(self.y_c, return_counts=True)
        return {int(label): int(count) for label, count in zip(labels, counts)}

    def subset(self, mask) -> "LabeledDataset":
        """Rows selected by a boolean mask or index array."""
        return dataclasses.replace(
            self,
            samples=self.samples[mask],
            y_c=self.y_c[mask],
            y_s=self.y_s[mask],
        )

    def select_class(self, label: int) -> "LabeledDataset":
        return self.subset(self.y_c == label)

    def replace(self, **changes) -> "LabeledDataset":
        return dataclasses.replace(self, **changes)

    def with_step(self, step: Dict[str, Any], **changes) -> "LabeledDataset":
        """New dataset with a provenance step appended."""
        return dataclasses.replace(self, provenance=self.provenance + (step,), **changes)
