"""
Concept estimation on the features of one class.

fit_pattern_cav estimates the signal pattern cov[x, y_s] / var(y_s);
fit_filter_cav uses the weight vector of a linear SVM. Both return unit
directions with the class-conditional means z_plus (artifact) and
z_minus (clean).
"""
import logging
from typing import Tuple

import numpy as np

from src.config.defaults import CONCEPT_DEFAULTS
from src.concepts.concept_vector import INPUT, LABEL_SOURCES, ConceptVector, HookPoint
from src.concepts.errors import ConceptError
from src.concepts.svm import LinearSvm, SvmConfig, fit_linear_svm
from src.numerics.errors import NumericsError
from src.numerics.stats import as_matrix, as_vector, column_mean, covariance_with_target, variance_of_target

logger = logging.getLogger(__name__)


def concept_means(X, y_s) -> Tuple[np.ndarray, np.ndarray]:
    """Means over the artifact (y_s = +1) and clean (y_s = -1) rows."""
    X = as_matrix(X)
    y_s = as_vector(y_s)
    if y_s.shape[0] != X.shape[0]:
        raise ConceptError(f"Label length {y_s.shape[0]} does not match {X.shape[0]} samples")
    positive = y_s == 1
    negative = y_s == -1
    if not positive.any() or not negative.any():
        raise ConceptError("label absent: both y_s = +1 and y_s = -1 rows are required")
    return column_mean(X[positive]), column_mean(X[negative])


def fit_pattern_cav(
    X,
    y_s,
    variance_floor: float = CONCEPT_DEFAULTS["variance_floor"],
    *,
    hook: HookPoint = INPUT,
    label_source: str = "ground_truth",
) -> ConceptVector:
    """
    Pattern-based concept vector raw = cov[x, y_s] / var(y_s).

    y_s may be ground-truth artifact flags or the predictions of an artifact
    detector; label_source records which.
    """
    if label_source not in LABEL_SOURCES:
        raise ConceptError(f"Unknown label source: {label_source}")
    X = as_matrix(X)
    y_s = as_vector(y_s)
    try:
        variance = variance_of_target(y_s)
        covariance = covariance_with_target(X, y_s)
    except NumericsError as e:
        raise ConceptError(str(e)) from e
    if variance < variance_floor:
        raise ConceptError(f"constant labels: var(y_s) = {variance:.3g} is below the floor {variance_floor:.3g}")
    raw = covariance / variance
    norm = float(np.linalg.norm(raw))
    if norm == 0:
        raise ConceptError("no signal: the estimated pattern is the zero vector")
    z_plus, z_minus = concept_means(X, y_s)
    return ConceptVector(
        v=raw / norm,
        kind="pattern",
        raw=raw,
        hook=hook,
        z_plus=z_plus,
        z_minus=z_minus,
        fit_meta={
            "label_source": label_source,
            "n_samples": int(X.shape[0]),
            "n_artifact": int((y_s == 1).sum()),
        },
    )


def fit_filter_cav(
    X,
    y_s,
    cfg: SvmConfig = SvmConfig(),
    *,
    hook: HookPoint = INPUT,
) -> ConceptVector:
    """Filter-based concept vector: the normalized weight vector of a linear SVM."""
    concept, _ = fit_filter_cav_with_svm(X, y_s, cfg, hook=hook)
    return concept


def fit_filter_cav_with_svm(
    X,
    y_s,
    cfg: SvmConfig = SvmConfig(),
    *,
    hook: HookPoint = INPUT,
) -> Tuple[ConceptVector, LinearSvm]:
    """fit_filter_cav that also hands back the SVM, e.g. to predict artifact labels."""
    X = as_matrix(X)
    y_s = as_vector(y_s)
    z_plus, z_minus = concept_means(X, y_s)
    svm = fit_linear_svm(X, y_s, cfg)
    norm = float(np.linalg.norm(svm.w))
    if norm == 0:
        raise ConceptError("no signal: the SVM weight vector is zero")
    diagnostics = svm.diagnostics
    concept = ConceptVector(
        v=svm.w / norm,
        kind="filter",
        raw=svm.w,
        hook=hook,
        z_plus=z_plus,
        z_minus=z_minus,
        fit_meta={
            "label_source": "ground_truth",
            "n_samples": int(X.shape[0]),
            "n_artifact": int((y_s == 1).sum()),
            "bias": svm.b,
            "objective": diagnostics.objective,
            "training_error": diagnostics.training_error,
            "converged": diagnostics.converged,
            "steps": diagnostics.steps,
        },
    )
    return concept, svm


def predict_artifact_labels(svm: LinearSvm, X) -> np.ndarray:
    """Artifact-detector labels y_s_hat in {-1, +1} from a fitted SVM."""
    return svm.predict(X)
