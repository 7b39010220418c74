"""
Training, fine-tuning, evaluation and feature extraction.

Training is deterministic given the optimizer seed: the shuffle order of
epoch e comes from Rng(seed).spawn("shuffle", e) and the dropout masks of
step s from Rng(seed).spawn("dropout", e, s).
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.clarc.maps import ClarcHook
from src.concepts.concept_vector import HookPoint
from src.config.defaults import FINETUNE_DEFAULTS
from src.datasets.dataset import LabeledDataset
from src.models.errors import ModelError
from src.models.network import NetworkModel, softmax_cross_entropy
from src.models.optimizers import OptimizerConfig, make_optimizer
from src.numerics.rng import Rng

logger = logging.getLogger(__name__)

EVAL_BATCH = 256

EvalSet = Tuple[str, LabeledDataset]


@dataclass
class TrainHistory:
    """Per-epoch training loss and accuracy plus accuracies on named eval sets."""
    train_loss: List[float] = field(default_factory=list)
    train_accuracy: List[float] = field(default_factory=list)
    eval_accuracy: Dict[str, List[float]] = field(default_factory=dict)

    @property
    def epochs(self) -> int:
        return len(self.train_loss)

    def to_dict(self) -> Dict[str, object]:
        return {
            "train_loss": list(self.train_loss),
            "train_accuracy": list(self.train_accuracy),
            "eval_accuracy": {name: list(values) for name, values in self.eval_accuracy.items()},
        }


def _labels(model: NetworkModel, ds: LabeledDataset) -> np.ndarray:
    y = np.asarray(ds.y_c, dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= model.num_classes):
        raise ModelError(f"Labels must lie in [0, {model.num_classes}), got [{y.min()}, {y.max()}]")
    return y


def _fit(
    model: NetworkModel,
    ds: LabeledDataset,
    opt: OptimizerConfig,
    evals: Sequence[EvalSet] = (),
    *,
    hook: Optional[ClarcHook] = None,
    subset_fraction: float = 0.0,
    trainable_from: int = 0,
) -> TrainHistory:
    if ds.n == 0:
        raise ModelError("Training set is empty")
    y = _labels(model, ds)
    optimizer = make_optimizer(opt)
    base = Rng(opt.rng_seed)
    params = {
        (index, name): value
        for index, name, value in model.parameters()
        if index >= trainable_from
    }
    history = TrainHistory(eval_accuracy={name: [] for name, _ in evals})
    for epoch in range(opt.epochs):
        lr = opt.lr_at(epoch)
        order = base.spawn("shuffle", epoch).permutation(ds.n)
        total_loss = 0.0
        correct = 0
        for step, start in enumerate(range(0, ds.n, opt.batch_size)):
            batch = order[start:start + opt.batch_size]
            hook_rows = None
            if hook is not None:
                draws = base.spawn("subset", epoch, step).uniform(batch.size)
                hook_rows = draws < subset_fraction
            logits, cache = model.forward(
                ds.samples[batch],
                hook=hook,
                mode="train",
                rng=base.spawn("dropout", epoch, step),
                hook_rows=hook_rows,
            )
            loss, dlogits = softmax_cross_entropy(logits, y[batch])
            if not math.isfinite(loss):
                raise ModelError(
                    f"Training diverged at epoch {epoch}, step {step}",
                    diagnostics={"epoch": epoch, "step": step, "loss": loss, "lr": lr},
                )
            grads = model.backward(cache, dlogits, stop_at=trainable_from)
            optimizer.step(params, {key: grads[key] for key in params}, lr)
            total_loss += loss * batch.size
            correct += int((logits.argmax(axis=1) == y[batch]).sum())
        history.train_loss.append(total_loss / ds.n)
        history.train_accuracy.append(correct / ds.n)
        for name, eval_ds in evals:
            history.eval_accuracy[name].append(evaluate(model, eval_ds))
        summary = ", ".join(f"{name}={values[-1]:.4f}" for name, values in history.eval_accuracy.items())
        logger.info(
            f"Epoch {epoch + 1}/{opt.epochs}: loss={history.train_loss[-1]:.4f}, "
            f"train_acc={history.train_accuracy[-1]:.4f}" + (f", {summary}" if summary else "")
        )
    return history


def train(
    model: NetworkModel,
    ds: LabeledDataset,
    opt: OptimizerConfig,
    evals: Sequence[EvalSet] = (),
) -> TrainHistory:
    """Minimize softmax cross-entropy over all parameters with mini-batch backprop."""
    return _fit(model, ds, opt, evals)


def finetune_subsequent(
    model: NetworkModel,
    ds: LabeledDataset,
    hook: ClarcHook,
    opt: OptimizerConfig,
    subset_fraction: float = FINETUNE_DEFAULTS["subset_fraction"],
    epochs: int = FINETUNE_DEFAULTS["epochs"],
    evals: Sequence[EvalSet] = (),
) -> TrainHistory:
    """
    Fine-tune the layers after the hook point on artifact-augmented data.

    In every batch a random subset_fraction of rows is routed through the
    augmentive hook; layers before the hook point stay frozen.
    """
    if hook.mode != "augmentive":
        raise ModelError(f"Fine-tuning needs an augmentive hook, got {hook.mode}")
    if not 0 <= subset_fraction <= 1:
        raise ModelError(f"subset_fraction must lie in [0, 1], got {subset_fraction}")
    position = model.hook_position(hook.point)
    logger.info(f"Fine-tuning layers from position {position} for {epochs} epochs (subset {subset_fraction})")
    return _fit(
        model,
        ds,
        opt.with_changes(epochs=epochs),
        evals,
        hook=hook,
        subset_fraction=subset_fraction,
        trainable_from=position,
    )


def predict_logits(model: NetworkModel, samples: np.ndarray, hook: Optional[ClarcHook] = None) -> np.ndarray:
    """Eval-mode logits in batches."""
    chunks = [
        model.forward(samples[start:start + EVAL_BATCH], hook=hook, mode="eval")[0]
        for start in range(0, samples.shape[0], EVAL_BATCH)
    ]
    if not chunks:
        return np.zeros((0, model.num_classes))
    return np.concatenate(chunks)


def predict(model: NetworkModel, samples: np.ndarray, hook: Optional[ClarcHook] = None) -> np.ndarray:
    """Argmax class; ties go to the lower class index."""
    return predict_logits(model, samples, hook).argmax(axis=1)


def evaluate(model: NetworkModel, ds: LabeledDataset, hook: Optional[ClarcHook] = None) -> float:
    """Fraction of samples whose argmax prediction equals y_c."""
    if ds.n == 0:
        return 0.0
    return float(np.mean(predict(model, ds.samples, hook) == np.asarray(ds.y_c)))


def extract_features(model: NetworkModel, ds: LabeledDataset, point: HookPoint) -> np.ndarray:
    """Flattened eval-mode activations at a hook point, one row per sample."""
    position = model.hook_position(point)
    chunks = []
    for start in range(0, ds.n, EVAL_BATCH):
        h, _ = model.forward(ds.samples[start:start + EVAL_BATCH], mode="eval", stop_at=position)
        chunks.append(h.reshape(h.shape[0], -1))
    if not chunks:
        return np.zeros((0, model.feature_dim(point)))
    return np.concatenate(chunks)
