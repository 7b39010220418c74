"""
Statistics primitives for concept estimation.

Covariance and variance use the population (1/n) convention; the pattern
estimator only consumes their ratio.
"""
import math
from typing import Sequence

import numpy as np

from src.numerics.errors import NumericsError


def as_matrix(X) -> np.ndarray:
    """Coerce input to a float64 matrix, flattening trailing sample axes."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1) if X.size else X.reshape(0, 0)
    elif X.ndim > 2:
        X = X.reshape(X.shape[0], -1)
    return X


def as_vector(y) -> np.ndarray:
    """Coerce input to a flat float64 vector."""
    return np.asarray(y, dtype=np.float64).reshape(-1)


def column_mean(X) -> np.ndarray:
    """Mean of every column of an n x d matrix."""
    X = as_matrix(X)
    if X.shape[0] == 0:
        raise NumericsError("empty input")
    return X.mean(axis=0)


def covariance_with_target(X, y) -> np.ndarray:
    """Per-feature covariance cov[x_j, y] with the 1/n convention."""
    X = as_matrix(X)
    y = as_vector(y)
    n = X.shape[0]
    if n < 2:
        raise NumericsError("degenerate sample")
    if y.shape[0] != n:
        raise NumericsError(f"Target length {y.shape[0]} does not match {n} samples")
    centered_y = y - y.mean()
    return (X - X.mean(axis=0)).T @ centered_y / n


def variance_of_target(y) -> float:
    """Variance of the target with the 1/n convention."""
    y = as_vector(y)
    if y.shape[0] < 2:
        raise NumericsError("degenerate sample")
    centered = y - y.mean()
    return float(centered @ centered / y.shape[0])


def cosine_similarity(a, b) -> float:
    """a.b / (|a| |b|), clipped to [-1, 1]."""
    a = as_vector(a)
    b = as_vector(b)
    if a.shape != b.shape:
        raise NumericsError(f"Dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise NumericsError("zero vector")
    return float(np.clip(a @ b / (norm_a * norm_b), -1.0, 1.0))


def axis_angle_deg(v, axis: Sequence[float] = (1.0, 0.0)) -> float:
    """Angle in degrees between v and a reference axis."""
    return math.degrees(math.acos(cosine_similarity(v, axis)))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shifted by the row maximum."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)
