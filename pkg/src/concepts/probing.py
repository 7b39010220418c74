"""
Concept probes: cosine retrieval of the samples closest to a concept and the
shift of the normalized model outputs when the concept is added to features.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from src.concepts.concept_vector import ConceptVector
from src.concepts.errors import ConceptError
from src.datasets.dataset import LabeledDataset
from src.models.errors import ModelError
from src.models.network import NetworkModel
from src.models.training import EVAL_BATCH, extract_features
from src.numerics.stats import as_matrix, softmax

logger = logging.getLogger(__name__)


def cosine_scores(v, X) -> np.ndarray:
    """Cosine similarity of every row of X with v; zero rows score NaN."""
    X = as_matrix(X)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size != X.shape[1]:
        raise ConceptError(f"Direction has dim {v.size}, rows have dim {X.shape[1]}")
    v_norm = float(np.linalg.norm(v))
    if v_norm == 0:
        raise ConceptError("zero vector: cannot score against a zero direction")
    row_norms = np.linalg.norm(X, axis=1)
    scores = np.full(X.shape[0], np.nan)
    nonzero = row_norms > 0
    scores[nonzero] = np.clip((X[nonzero] @ v) / (row_norms[nonzero] * v_norm), -1.0, 1.0)
    return scores


def nearest_neighbors(concept: ConceptVector, X, k: int) -> List[int]:
    """
    Indices of the k rows most cosine-similar to the concept direction.

    Ranked by descending similarity, ties by lower index. Zero rows are
    excluded; k may not exceed the number of rows.
    """
    X = as_matrix(X)
    if k < 0 or k > X.shape[0]:
        raise ConceptError(f"k must lie in [0, {X.shape[0]}], got {k}")
    scores = cosine_scores(concept.v, X)
    excluded = np.flatnonzero(np.isnan(scores))
    for index in excluded:
        logger.warning(f"Row {index} has zero norm and is excluded from neighbour retrieval")
    candidates = np.flatnonzero(~np.isnan(scores))
    # lexsort sorts by the last key first: descending score, then ascending index
    order = candidates[np.lexsort((candidates, -scores[candidates]))]
    return [int(i) for i in order[:k]]


@dataclass
class LogitShiftReport:
    """Mean softmax outputs before and after adding scale * v at the hook point."""
    target: int
    scale: float
    hook: str
    n_samples: int
    target_before: float
    target_after: float
    true_before: float
    true_after: float
    per_class: Dict[int, Dict[str, float]] = field(default_factory=dict)

    @property
    def target_shift(self) -> float:
        return self.target_after - self.target_before

    def to_dict(self) -> Dict[str, Any]:
        return {
            "target": self.target,
            "scale": self.scale,
            "hook": self.hook,
            "n_samples": self.n_samples,
            "target_before": self.target_before,
            "target_after": self.target_after,
            "true_before": self.true_before,
            "true_after": self.true_after,
            "per_class": {str(c): dict(values) for c, values in sorted(self.per_class.items())},
        }


def probe_logit_shift(
    model: NetworkModel,
    ds: LabeledDataset,
    concept: ConceptVector,
    target: int,
    scale: Optional[float] = None,
) -> LogitShiftReport:
    """
    Add scale * v to every sample's hook-point features and compare the
    softmax outputs. scale defaults to |z_plus - z_minus|.
    """
    if not 0 <= target < model.num_classes:
        raise ConceptError(f"Target class {target} outside [0, {model.num_classes})")
    try:
        position = model.hook_position(concept.hook)
        dim = model.feature_dim(concept.hook)
    except ModelError as e:
        raise ConceptError(f"hook mismatch: {e}") from e
    if dim != concept.dim:
        raise ConceptError(f"hook mismatch: features at {concept.hook} have dim {dim}, concept has {concept.dim}")
    if ds.n == 0:
        raise ConceptError("empty input: cannot probe an empty dataset")
    scale = concept.mean_gap() if scale is None else float(scale)

    H = extract_features(model, ds, concept.hook)
    shift = scale * np.asarray(concept.v)
    before = np.concatenate([
        softmax(model.forward_from(position, H[start:start + EVAL_BATCH]))
        for start in range(0, ds.n, EVAL_BATCH)
    ])
    after = np.concatenate([
        softmax(model.forward_from(position, H[start:start + EVAL_BATCH] + shift))
        for start in range(0, ds.n, EVAL_BATCH)
    ])
    y = np.asarray(ds.y_c, dtype=np.int64)
    rows = np.arange(ds.n)
    per_class = {}
    for label in np.unique(y):
        mask = y == label
        per_class[int(label)] = {
            "n": int(mask.sum()),
            "target_before": float(before[mask, target].mean()),
            "target_after": float(after[mask, target].mean()),
            "true_before": float(before[mask, label].mean()),
            "true_after": float(after[mask, label].mean()),
        }
    report = LogitShiftReport(
        target=target,
        scale=scale,
        hook=str(concept.hook),
        n_samples=ds.n,
        target_before=float(before[:, target].mean()),
        target_after=float(after[:, target].mean()),
        true_before=float(before[rows, y].mean()),
        true_after=float(after[rows, y].mean()),
        per_class=per_class,
    )
    logger.debug(f"Logit probe at {report.hook}: target {report.target_before:.4f} -> {report.target_after:.4f}")
    return report
