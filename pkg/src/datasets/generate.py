"""
Desk-scale image classes: one fixed low-frequency template per class plus
pixel noise.
"""
import math
import logging
from typing import Sequence, Tuple

import numpy as np

from src.config.defaults import DATASET_DEFAULTS
from src.datasets.dataset import LabeledDataset
from src.datasets.errors import DatasetError
from src.numerics.rng import Rng

logger = logging.getLogger(__name__)

_WAVES_PER_TEMPLATE = 3
_MAX_FREQUENCY = 3
# Share of each side left dark around the pattern, so corners hold background only
_MARGIN_FRACTION = 0.25


def class_templates(
    num_classes: int,
    shape: Sequence[int],
    dataset_seed: int,
    peak: float = DATASET_DEFAULTS["template_peak"],
) -> np.ndarray:
    """
    Deterministic (K, C, H, W) class templates.

    Each template is a sum of a few low-frequency plane waves over the inner
    window, rescaled to [-1, 1], cut at zero and scaled to peak, so about half
    of the inner pixels form a foreground region. The outer margin stays zero.
    Channels share the same grey pattern.
    """
    channels, height, width = shape
    top, left = int(height * _MARGIN_FRACTION), int(width * _MARGIN_FRACTION)
    inner_h, inner_w = height - 2 * top, width - 2 * left
    rng = Rng(dataset_seed).spawn("templates")
    rows = np.arange(inner_h).reshape(-1, 1) / inner_h
    cols = np.arange(inner_w).reshape(1, -1) / inner_w
    templates = np.zeros((num_classes, channels, height, width))
    for k in range(num_classes):
        pattern = np.zeros((inner_h, inner_w))
        draws = rng.uniform(4 * _WAVES_PER_TEMPLATE).reshape(_WAVES_PER_TEMPLATE, 4)
        for fy_draw, fx_draw, phase_draw, amp_draw in draws:
            fy = 1 + int(fy_draw * _MAX_FREQUENCY)
            fx = 1 + int(fx_draw * _MAX_FREQUENCY)
            phase = 2 * math.pi * phase_draw
            pattern += (0.5 + amp_draw) * np.cos(2 * math.pi * (fy * rows + fx * cols) + phase)
        span = pattern.max() - pattern.min()
        scaled = 2 * (pattern - pattern.min()) / span - 1 if span > 0 else np.zeros_like(pattern)
        templates[k, :, top:top + inner_h, left:left + inner_w] = peak * np.clip(scaled, 0.0, 1.0)
    return templates


def gen_pattern_classes(
    num_classes: int,
    shape: Tuple[int, int, int],
    n_per_class: int,
    noise_sigma: float,
    rng: Rng,
    *,
    dataset_seed: int = DATASET_DEFAULTS["dataset_seed"],
    template_peak: float = DATASET_DEFAULTS["template_peak"],
    split: str = "train",
) -> LabeledDataset:
    """
    Generate n_per_class samples of every class, ordered class by class.

    Templates depend only on dataset_seed; the pixel noise comes from rng.
    """
    if num_classes < 2:
        raise DatasetError(f"Need at least 2 classes, got {num_classes}")
    if len(shape) != 3 or shape[0] < 1 or shape[1] < 8 or shape[2] < 8:
        raise DatasetError(f"invalid shape {tuple(shape)}: need (C, H, W) with H, W >= 8")
    if n_per_class < 1:
        raise DatasetError(f"n_per_class must be positive, got {n_per_class}")
    if noise_sigma < 0:
        raise DatasetError(f"noise_sigma must be non-negative, got {noise_sigma}")
    if not 0 < template_peak <= 1:
        raise DatasetError(f"template_peak must lie in (0, 1], got {template_peak}")

    shape = tuple(int(s) for s in shape)
    templates = class_templates(num_classes, shape, dataset_seed, template_peak).reshape(num_classes, -1)
    dim = templates.shape[1]
    y_c = np.repeat(np.arange(num_classes), n_per_class)
    noise = rng.gaussian(0.0, noise_sigma, y_c.size * dim).reshape(y_c.size, dim)
    samples = np.clip(templates[y_c] + noise, 0.0, 1.0)
    logger.debug(f"Generated {split} split: {num_classes} classes x {n_per_class} samples, shape {shape}")
    return LabeledDataset(
        samples=samples,
        y_c=y_c,
        y_s=-np.ones(y_c.size, dtype=np.int8),
        split=split,
        num_classes=num_classes,
        channel_shape=shape,
        provenance=({
            "step": "gen_pattern_classes",
            "num_classes": num_classes,
            "shape": list(shape),
            "n_per_class": n_per_class,
            "noise_sigma": noise_sigma,
            "template_peak": template_peak,
            "dataset_seed": dataset_seed,
            "rng_seed": rng.seed,
        },),
    )


def gen_train_test(
    num_classes: int = DATASET_DEFAULTS["num_classes"],
    shape: Tuple[int, int, int] = DATASET_DEFAULTS["shape"],
    n_train_per_class: int = DATASET_DEFAULTS["n_train_per_class"],
    n_test_per_class: int = DATASET_DEFAULTS["n_test_per_class"],
    noise_sigma: float = DATASET_DEFAULTS["noise_sigma"],
    *,
    dataset_seed: int = DATASET_DEFAULTS["dataset_seed"],
    template_peak: float = DATASET_DEFAULTS["template_peak"],
) -> Tuple[LabeledDataset, LabeledDataset]:
    """Train and test splits sharing templates, with independent noise."""
    base = Rng(dataset_seed)
    train = gen_pattern_classes(
        num_classes, shape, n_train_per_class, noise_sigma, base.spawn("train"),
        dataset_seed=dataset_seed, template_peak=template_peak, split="train",
    )
    test = gen_pattern_classes(
        num_classes, shape, n_test_per_class, noise_sigma, base.spawn("test"),
        dataset_seed=dataset_seed, template_peak=template_peak, split="test",
    )
    return train, test
