"""
Artifact injection: colour tint, bottom-right box patch and additive shift.
"""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from src.config.defaults import ARTIFACT_DEFAULTS
from src.datasets.dataset import ArtifactSpec, LabeledDataset
from src.datasets.errors import DatasetError
from src.numerics.rng import Rng

logger = logging.getLogger(__name__)

# Ten hues at steps of 36 degrees on the HSV wheel, full saturation and value, as RGB
COLOR_TABLE = np.array([
    [1.0, 0.0, 0.0],
    [1.0, 0.6, 0.0],
    [0.8, 1.0, 0.0],
    [0.2, 1.0, 0.0],
    [0.0, 1.0, 0.4],
    [0.0, 1.0, 1.0],
    [0.0, 0.4, 1.0],
    [0.2, 0.0, 1.0],
    [0.8, 0.0, 1.0],
    [1.0, 0.0, 0.6],
])


def box_spec(size: int = ARTIFACT_DEFAULTS["box_size"], value: float = ARTIFACT_DEFAULTS["box_value"]) -> ArtifactSpec:
    return ArtifactSpec(kind="box_patch", box_size=size, value=value)


def shift_spec(template: np.ndarray, factor: float = ARTIFACT_DEFAULTS["shift_factor"]) -> ArtifactSpec:
    return ArtifactSpec(kind="additive_shift", template=template, factor=factor)


def color_spec(color_index: int = ARTIFACT_DEFAULTS["color_index"]) -> ArtifactSpec:
    return ArtifactSpec(kind="color_tint", color_index=color_index)


def shift_template_from(ds: LabeledDataset, source_class: int, rng: Rng) -> np.ndarray:
    """A randomly picked sample of source_class, used as the shift template."""
    candidates = np.flatnonzero(ds.y_c == source_class)
    if candidates.size == 0:
        raise DatasetError(f"class {source_class} absent; cannot pick a shift template")
    pick = candidates[int(rng.uniform(1)[0] * candidates.size)]
    logger.debug(f"Shift template: sample {pick} of class {source_class}")
    return np.array(ds.samples[pick], copy=True)


def validate_spec(spec: ArtifactSpec, channel_shape: Optional[Sequence[int]], dim: int) -> None:
    """Check that spec can be applied to samples of the given shape."""
    if spec.kind == "additive_shift":
        if spec.template.size != dim:
            raise DatasetError(
                f"Shape mismatch: template has {spec.template.size} values, samples have {dim}"
            )
        return
    if channel_shape is None:
        raise DatasetError(f"{spec.kind} requires image samples with a channel shape")
    channels, height, width = channel_shape
    if spec.kind == "box_patch":
        if spec.box_size < 1 or spec.box_size > min(height, width):
            raise DatasetError(f"Box size {spec.box_size} does not fit a {height}x{width} image")
    elif spec.kind == "color_tint":
        if channels != 3:
            raise DatasetError(f"color_tint needs 3 channels, got {channels}")
        if not 0 <= spec.color_index < len(COLOR_TABLE):
            raise DatasetError(f"Invalid color index {spec.color_index}")


def _apply_images(images: np.ndarray, spec: ArtifactSpec) -> np.ndarray:
    """Apply spec to an (m, C, H, W) stack; returns a new array."""
    out = np.array(images, dtype=np.float64, copy=True)
    low, high = spec.clamp_range
    if spec.kind == "box_patch":
        size = spec.box_size
        out[:, :, -size:, -size:] = spec.value
    elif spec.kind == "additive_shift":
        out = np.clip(out + spec.factor * spec.template.reshape(out.shape[1:]), low, high)
    else:
        tint = COLOR_TABLE[spec.color_index].reshape(1, 3, 1, 1)
        foreground = (out > 0).any(axis=1, keepdims=True)
        out = np.clip(np.where(foreground, out * tint, out), low, high)
    return out


def apply_artifact(
    x: np.ndarray,
    spec: ArtifactSpec,
    channel_shape: Optional[Tuple[int, int, int]] = None,
) -> np.ndarray:
    """
    Apply an artifact to one sample.

    x is either a (C, H, W) image or a flat vector together with its
    channel_shape. The result has the shape of x.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        channel_shape = x.shape
    elif channel_shape is None and spec.kind != "additive_shift":
        raise DatasetError(f"{spec.kind} needs a channel shape for flat samples")
    if channel_shape is None:
        channel_shape = (1, 1, x.size)
    validate_spec(spec, channel_shape if spec.kind != "additive_shift" else None, x.size)
    if int(np.prod(channel_shape)) != x.size:
        raise DatasetError(f"Shape mismatch: sample of size {x.size} vs channel shape {channel_shape}")
    image = x.reshape((1,) + tuple(channel_shape))
    return _apply_images(image, spec).reshape(x.shape)


def apply_artifact_rows(ds: LabeledDataset, rows: np.ndarray, spec: ArtifactSpec) -> np.ndarray:
    """Copy of ds.samples with the artifact applied to the given rows."""
    validate_spec(spec, ds.channel_shape, ds.dim)
    samples = np.array(ds.samples, copy=True)
    if len(rows) == 0:
        return samples
    shape = ds.channel_shape or (1, 1, ds.dim)
    stack = samples[rows].reshape((len(rows),) + tuple(shape))
    samples[rows] = _apply_images(stack, spec).reshape(len(rows), -1)
    return samples
