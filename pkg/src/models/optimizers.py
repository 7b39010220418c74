"""
SGD and AdaDelta.

AdaDelta keeps running averages of squared gradients E[g^2] and squared
updates E[dx^2] per parameter:

    E[g^2]  <- rho E[g^2] + (1 - rho) g^2
    dx       = sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
    E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
    param   <- param - lr * dx

The learning rate is multiplied by per_epoch_lr_factor after every epoch.
"""
import logging
from dataclasses import dataclass, replace
from typing import Dict, Tuple

import numpy as np

from src.config.defaults import OPTIMIZER_DEFAULTS
from src.models.errors import ModelError

logger = logging.getLogger(__name__)

OPTIMIZER_KINDS = ("sgd", "adadelta")

ParamKey = Tuple[int, str]


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = OPTIMIZER_DEFAULTS["kind"]
    lr: float = OPTIMIZER_DEFAULTS["lr"]
    rho: float = OPTIMIZER_DEFAULTS["rho"]
    eps: float = OPTIMIZER_DEFAULTS["eps"]
    per_epoch_lr_factor: float = OPTIMIZER_DEFAULTS["per_epoch_lr_factor"]
    epochs: int = OPTIMIZER_DEFAULTS["epochs"]
    batch_size: int = OPTIMIZER_DEFAULTS["batch_size"]
    rng_seed: int = OPTIMIZER_DEFAULTS["rng_seed"]

    def validate(self) -> None:
        if self.kind not in OPTIMIZER_KINDS:
            raise ModelError(f"Unknown optimizer: {self.kind}. Must be one of {list(OPTIMIZER_KINDS)}")
        if self.lr <= 0:
            raise ModelError(f"lr must be positive, got {self.lr}")
        if not 0 < self.per_epoch_lr_factor <= 1:
            raise ModelError(f"per_epoch_lr_factor must lie in (0, 1], got {self.per_epoch_lr_factor}")
        if not 0 < self.rho < 1:
            raise ModelError(f"rho must lie in (0, 1), got {self.rho}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ModelError("epochs and batch_size must be positive")

    def with_changes(self, **changes) -> "OptimizerConfig":
        return replace(self, **changes)

    def lr_at(self, epoch: int) -> float:
        return self.lr * self.per_epoch_lr_factor ** epoch


class Sgd:
    """Plain gradient descent."""

    def __init__(self, cfg: OptimizerConfig):
        self.cfg = cfg

    def step(self, params: Dict[ParamKey, np.ndarray], grads: Dict[ParamKey, np.ndarray], lr: float) -> None:
        for key, grad in grads.items():
            params[key] -= lr * grad


class AdaDelta:
    """AdaDelta with per-parameter accumulators created on first use."""

    def __init__(self, cfg: OptimizerConfig):
        self.cfg = cfg
        self.square_grads: Dict[ParamKey, np.ndarray] = {}
        self.square_updates: Dict[ParamKey, np.ndarray] = {}

    def step(self, params: Dict[ParamKey, np.ndarray], grads: Dict[ParamKey, np.ndarray], lr: float) -> None:
        rho, eps = self.cfg.rho, self.cfg.eps
        for key, grad in grads.items():
            if key not in self.square_grads:
                self.square_grads[key] = np.zeros_like(grad)
                self.square_updates[key] = np.zeros_like(grad)
            eg2 = self.square_grads[key]
            ex2 = self.square_updates[key]
            eg2 *= rho
            eg2 += (1.0 - rho) * grad * grad
            delta = np.sqrt(ex2 + eps) / np.sqrt(eg2 + eps) * grad
            ex2 *= rho
            ex2 += (1.0 - rho) * delta * delta
            params[key] -= lr * delta

    def reset(self) -> None:
        self.square_grads.clear()
        self.square_updates.clear()


def make_optimizer(cfg: OptimizerConfig):
    cfg.validate()
    return AdaDelta(cfg) if cfg.kind == "adadelta" else Sgd(cfg)
