"""
Finite-difference check of the manual backward pass.

Central differences with step epsilon on every parameter element, compared
with backprop as |g_bp - g_fd| / max(|g_bp|, |g_fd|, 1e-8). Runs in eval
mode; ReLU and max-pool kinks make differences meaningless, so kink_margin
reports how far the point is from the nearest kink.
"""
import logging
from typing import Tuple

import numpy as np

from src.config.defaults import GRADCHECK_DEFAULTS
from src.models.errors import ModelError
from src.models.layers import MaxPool2D, ReLU
from src.models.network import NetworkModel, softmax_cross_entropy
from src.numerics.rng import Rng

logger = logging.getLogger(__name__)

# Absorbs round-off of central differences where the gradient is exactly zero
_FLOOR = 1e-8


def _loss(model: NetworkModel, x: np.ndarray, y: np.ndarray) -> float:
    logits, _ = model.forward(x, mode="eval")
    return softmax_cross_entropy(logits, y)[0]


def relative_error(exact: float, numeric: float) -> float:
    return abs(exact - numeric) / max(abs(exact), abs(numeric), _FLOOR)


def kink_margin(model: NetworkModel, x: np.ndarray) -> float:
    """
    Smallest distance of any ReLU input to 0 and of any max-pool window's
    runner-up to its maximum, at the point x.
    """
    _, cache = model.forward(x, mode="eval")
    margin = np.inf
    for index, layer in enumerate(model.layers):
        inputs = cache.activations[index]
        if isinstance(layer, ReLU):
            margin = min(margin, float(np.abs(inputs).min()))
        elif isinstance(layer, MaxPool2D):
            windows = np.sort(layer._windows(inputs), axis=-1)
            margin = min(margin, float((windows[..., -1] - windows[..., -2]).min()))
    return margin


def gradient_check(
    model: NetworkModel,
    x: np.ndarray,
    y: np.ndarray,
    epsilon: float = GRADCHECK_DEFAULTS["epsilon"],
) -> float:
    """Maximum relative error between backprop and central-difference gradients."""
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    logits, cache = model.forward(x, mode="eval")
    _, dlogits = softmax_cross_entropy(logits, y)
    analytic = model.backward(cache, dlogits)

    worst = 0.0
    worst_at: Tuple[int, str, int] = (-1, "", -1)
    for index, name, value in model.parameters():
        grad = analytic[(index, name)]
        flat = value.reshape(-1)
        for j in range(flat.size):
            original = flat[j]
            flat[j] = original + epsilon
            plus = _loss(model, x, y)
            flat[j] = original - epsilon
            minus = _loss(model, x, y)
            flat[j] = original
            numeric = (plus - minus) / (2.0 * epsilon)
            exact = grad.reshape(-1)[j]
            error = relative_error(exact, numeric)
            if error > worst:
                worst = error
                worst_at = (index, name, j)
    logger.info(f"Gradient check: max relative error {worst:.3e} at layer {worst_at[0]} {worst_at[1]}[{worst_at[2]}]")
    return worst


def kink_free_input(
    model: NetworkModel,
    rng: Rng,
    batch: int = 2,
    min_margin: float = GRADCHECK_DEFAULTS["kink_margin"],
    attempts: int = 100,
) -> np.ndarray:
    """Uniform [0, 1) inputs whose kink margin exceeds min_margin."""
    for attempt in range(attempts):
        x = rng.spawn("input", attempt).uniform(batch * model.input_dim).reshape((batch,) + model.input_shape)
        margin = kink_margin(model, x)
        if margin > min_margin:
            logger.debug(f"Kink-free input after {attempt + 1} draws (margin {margin:.2e})")
            return x
    raise ModelError(f"No input with kink margin above {min_margin} in {attempts} draws")
