"""
Linear SVM trained with deterministic mini-batch Pegasos.

Minimizes  lambda/2 |w|^2 + (1/n) sum max(0, 1 - y_i (w.x_i + b)).
Features are centered first, and the bias enters as an extra constant
feature so it shares the step schedule 1/(lambda t). The reported solution
is the average of the iterates of the final tail_fraction of epochs.

converged is False when the objective of the running tail average rises
from one tail epoch to the next by more than monotone_tolerance (relative
to max(1, |objective|)).
"""
import math
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from src.config.defaults import SVM_DEFAULTS
from src.concepts.errors import ConceptError
from src.numerics.rng import Rng
from src.numerics.stats import as_matrix, as_vector

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class SvmConfig:
    regularization: float = SVM_DEFAULTS["regularization"]
    epochs: int = SVM_DEFAULTS["epochs"]
    batch_size: int = SVM_DEFAULTS["batch_size"]
    tail_fraction: float = SVM_DEFAULTS["tail_fraction"]
    monotone_tolerance: float = SVM_DEFAULTS["monotone_tolerance"]
    rng_seed: int = SVM_DEFAULTS["rng_seed"]

    def validate(self) -> None:
        if self.regularization <= 0:
            raise ConceptError(f"regularization must be positive, got {self.regularization}")
        if self.epochs < 1:
            raise ConceptError(f"epochs must be at least 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConceptError(f"batch_size must be at least 1, got {self.batch_size}")
        if not 0 < self.tail_fraction <= 1:
            raise ConceptError(f"tail_fraction must lie in (0, 1], got {self.tail_fraction}")
        if self.monotone_tolerance < 0:
            raise ConceptError(f"monotone_tolerance must be non-negative, got {self.monotone_tolerance}")


@dataclass
class SvmDiagnostics:
    objective: float = math.nan
    training_error: float = math.nan
    tail_objectives: List[float] = field(default_factory=list)
    converged: bool = True
    steps: int = 0


@dataclass
class LinearSvm:
    """Fitted hinge-loss classifier; decision(x) = w.x + b."""
    w: np.ndarray
    b: float
    diagnostics: SvmDiagnostics

    def decision(self, X) -> np.ndarray:
        return as_matrix(X) @ self.w + self.b

    def predict(self, X) -> np.ndarray:
        """Labels in {-1, +1}; a zero decision value counts as +1."""
        return np.where(self.decision(X) >= 0, 1, -1).astype(np.int64)


def hinge_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    margins = y * (X @ w + b)
    return float(0.5 * lam * (w @ w) + np.maximum(0.0, 1.0 - margins).mean())


def fit_linear_svm(X, y, cfg: SvmConfig = SvmConfig()) -> LinearSvm:
    """Train a linear SVM on labels y in {-1, +1}."""
    cfg.validate()
    X = as_matrix(X)
    y = as_vector(y)
    n, d = X.shape
    if n < 2:
        raise ConceptError("degenerate sample")
    if y.shape[0] != n:
        raise ConceptError(f"Label length {y.shape[0]} does not match {n} samples")
    if not (np.any(y == 1) and np.any(y == -1)):
        raise ConceptError("Both artifact labels must be present")

    lam = cfg.regularization
    center = X.mean(axis=0)
    # Constant column carries the bias
    Z = np.hstack([X - center, np.ones((n, 1))])
    radius = 1.0 / math.sqrt(lam)
    rng = Rng(cfg.rng_seed)

    w = np.zeros(d + 1)
    tail_start = cfg.epochs - max(1, int(round(cfg.tail_fraction * cfg.epochs)))
    w_sum = np.zeros(d + 1)
    tail_count = 0
    diagnostics = SvmDiagnostics()
    t = 0
    for epoch in range(cfg.epochs):
        order = rng.spawn("epoch", epoch).permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            t += 1
            eta = 1.0 / (lam * t)
            Zb, yb = Z[batch], y[batch]
            violated = yb * (Zb @ w) < 1.0
            step = (yb[violated] @ Zb[violated]) / batch.size
            w = (1.0 - eta * lam) * w + eta * step
            norm = np.linalg.norm(w)
            if norm > radius:
                w *= radius / norm
            if epoch >= tail_start:
                w_sum += w
                tail_count += 1
        if epoch >= tail_start:
            avg = w_sum / tail_count
            # The iterates also shrink the bias, so track the objective they descend
            diagnostics.tail_objectives.append(hinge_objective(avg, 0.0, Z, y, lam))

    avg = w_sum / tail_count
    w_hat = avg[:d]
    b_hat = float(avg[d] - w_hat @ center)
    objectives = diagnostics.tail_objectives
    diagnostics.converged = all(
        later <= earlier + cfg.monotone_tolerance * max(1.0, abs(earlier))
        for earlier, later in zip(objectives, objectives[1:])
    )
    diagnostics.objective = hinge_objective(w_hat, b_hat, X, y, lam)
    diagnostics.steps = t
    svm = LinearSvm(w=w_hat, b=b_hat, diagnostics=diagnostics)
    diagnostics.training_error = float(np.mean(svm.predict(X) != y))
    if not diagnostics.converged:
        logger.warning(
            f"SVM tail objective is not monotone over {len(objectives)} epochs "
            f"(final {diagnostics.objective:.6g}); treat the filter direction with care"
        )
    logger.debug(
        f"SVM fitted: objective={diagnostics.objective:.6g}, "
        f"training_error={diagnostics.training_error:.4f}, steps={t}"
    )
    return svm
