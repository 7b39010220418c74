"""
Clever Hans, Backdoor and test-set poisoning.

Poisoned counts are floor(N * rate), so a run never exceeds the requested
rate. Selections are drawn per class in ascending class order.
"""
import math
import logging

import numpy as np

from src.datasets.artifacts import apply_artifact_rows
from src.datasets.dataset import ArtifactSpec, LabeledDataset
from src.datasets.errors import DatasetError
from src.numerics.rng import Rng

logger = logging.getLogger(__name__)

# Absorbs representation error such as 0.29 * 100 = 28.999999999999996
_COUNT_SLACK = 1e-9


def poisoned_count(n: int, rate: float) -> int:
    """floor(n * rate)."""
    return int(math.floor(n * rate + _COUNT_SLACK))


def _check_rate(rate: float, name: str, allow_zero: bool = False) -> None:
    low_ok = rate >= 0 if allow_zero else rate > 0
    if not (low_ok and rate <= 1):
        bound = "[0, 1]" if allow_zero else "(0, 1]"
        raise DatasetError(f"{name} must lie in {bound}, got {rate}")


def _select(rng: Rng, candidates: np.ndarray, rate: float) -> np.ndarray:
    count = poisoned_count(candidates.size, rate)
    return candidates[rng.select(candidates.size, count)]


def poison_clever_hans(ds: LabeledDataset, t: int, r_ch: float, spec: ArtifactSpec, rng: Rng) -> LabeledDataset:
    """Insert the artifact into floor(N_t * r_ch) training samples of class t."""
    if ds.split != "train":
        raise DatasetError(f"Clever Hans poisoning needs a train split, got {ds.split}")
    _check_rate(r_ch, "r_ch")
    candidates = np.flatnonzero(ds.y_c == t)
    if candidates.size == 0:
        raise DatasetError(f"class {t} absent")
    rows = _select(rng, candidates, r_ch)
    y_s = np.array(ds.y_s, copy=True)
    y_s[rows] = 1
    logger.info(f"Clever Hans: {rows.size} of {candidates.size} class-{t} samples carry the artifact")
    return ds.with_step(
        {"step": "poison_clever_hans", "target": int(t), "rate": r_ch,
         "count": int(rows.size), "artifact": spec.describe()},
        samples=apply_artifact_rows(ds, rows, spec),
        y_s=y_s,
    )


def poison_backdoor(ds: LabeledDataset, t: int, r_bd: float, spec: ArtifactSpec, rng: Rng) -> LabeledDataset:
    """For every class c, insert the artifact into floor(N_c * r_bd) samples and relabel them t."""
    if ds.split != "train":
        raise DatasetError(f"Backdoor poisoning needs a train split, got {ds.split}")
    _check_rate(r_bd, "r_bd")
    if not 0 <= t < ds.num_classes:
        raise DatasetError(f"class {t} absent")
    selected = [
        _select(rng, np.flatnonzero(ds.y_c == label), r_bd)
        for label in sorted(ds.class_counts())
    ]
    rows = np.concatenate(selected) if selected else np.zeros(0, dtype=np.int64)
    y_s = np.array(ds.y_s, copy=True)
    y_c = np.array(ds.y_c, copy=True)
    y_s[rows] = 1
    y_c[rows] = t
    logger.info(f"Backdoor: {rows.size} samples carry the trigger and now have label {t}")
    return ds.with_step(
        {"step": "poison_backdoor", "target": int(t), "rate": r_bd,
         "count": int(rows.size), "artifact": spec.describe()},
        samples=apply_artifact_rows(ds, rows, spec),
        y_c=y_c,
        y_s=y_s,
    )


def poison_test(ds: LabeledDataset, r_p: float, spec: ArtifactSpec, rng: Rng) -> LabeledDataset:
    """Insert the artifact into floor(N_c * r_p) test samples of every class; labels unchanged."""
    if ds.split != "test":
        raise DatasetError(f"Test poisoning needs a test split, got {ds.split}")
    _check_rate(r_p, "r_p", allow_zero=True)
    if r_p == 0:
        return ds
    selected = [
        _select(rng, np.flatnonzero(ds.y_c == label), r_p)
        for label in sorted(ds.class_counts())
    ]
    rows = np.concatenate(selected)
    y_s = np.array(ds.y_s, copy=True)
    y_s[rows] = 1
    logger.debug(f"Poisoned test split: {rows.size} of {ds.n} samples")
    return ds.with_step(
        {"step": "poison_test", "rate": r_p, "count": int(rows.size), "artifact": spec.describe()},
        samples=apply_artifact_rows(ds, rows, spec),
        y_s=y_s,
    )
