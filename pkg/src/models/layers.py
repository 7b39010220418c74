"""
Layers with explicit forward/backward passes.

forward(x, train, rng) returns (out, cache); backward(dout, cache) returns
(dx, grads) where grads maps parameter names to arrays shaped like params.
Images are (N, C, H, W). Convolutions are 3x3-style valid convolutions with
stride 1 computed through an im2col view.
"""
import math
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.models.errors import ModelError
from src.numerics.rng import Rng

logger = logging.getLogger(__name__)

# He-style uniform init: U(-s, s) with s = sqrt(INIT_GAIN / fan_in)
INIT_GAIN = 6.0


def init_uniform(rng: Rng, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = math.sqrt(INIT_GAIN / fan_in)
    return (2.0 * rng.uniform(int(np.prod(shape))) - 1.0).reshape(shape) * bound


class Layer:
    """Base layer without parameters."""
    kind = "layer"
    trainable = False

    def __init__(self):
        self.params: Dict[str, np.ndarray] = {}

    def output_shape(self, input_shape: Tuple[int, ...]) -> Tuple[int, ...]:
        return input_shape

    def forward(self, x: np.ndarray, train: bool = False, rng: Optional[Rng] = None) -> Tuple[np.ndarray, Any]:
        raise NotImplementedError

    def backward(self, dout: np.ndarray, cache: Any) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        raise NotImplementedError

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind}


class Dense(Layer):
    kind = "dense"
    trainable = True

    def __init__(self, in_features: int, out_features: int, rng: Rng):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.params = {
            "W": init_uniform(rng, (in_features, out_features), in_features),
            "b": np.zeros(out_features),
        }

    def output_shape(self, input_shape):
        if input_shape != (self.in_features,):
            raise ModelError(f"Dense layer expects ({self.in_features},), got {input_shape}")
        return (self.out_features,)

    def forward(self, x, train=False, rng=None):
        return x @ self.params["W"] + self.params["b"], x

    def backward(self, dout, cache):
        x = cache
        grads = {"W": x.T @ dout, "b": dout.sum(axis=0)}
        return dout @ self.params["W"].T, grads

    def describe(self):
        return {"kind": self.kind, "in": self.in_features, "out": self.out_features}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train=False, rng=None):
        return np.maximum(x, 0.0), x

    def backward(self, dout, cache):
        return dout * (cache > 0), {}


class Conv2D(Layer):
    kind = "conv2d"
    trainable = True

    def __init__(self, in_channels: int, out_channels: int, rng: Rng, kernel_size: int = 3):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        fan_in = in_channels * kernel_size * kernel_size
        self.params = {
            "W": init_uniform(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in),
            "b": np.zeros(out_channels),
        }

    def output_shape(self, input_shape):
        if len(input_shape) != 3 or input_shape[0] != self.in_channels:
            raise ModelError(f"Conv layer expects ({self.in_channels}, H, W), got {input_shape}")
        k = self.kernel_size
        _, height, width = input_shape
        if height < k or width < k:
            raise ModelError(f"Input {height}x{width} is smaller than the {k}x{k} kernel")
        return (self.out_channels, height - k + 1, width - k + 1)

    def forward(self, x, train=False, rng=None):
        k = self.kernel_size
        n = x.shape[0]
        # (N, C, Ho, Wo, k, k) -> (N*Ho*Wo, C*k*k)
        windows = sliding_window_view(x, (k, k), axis=(2, 3))
        out_h, out_w = windows.shape[2], windows.shape[3]
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, -1)
        weights = self.params["W"].reshape(self.out_channels, -1)
        out = cols @ weights.T + self.params["b"]
        out = out.reshape(n, out_h, out_w, self.out_channels).transpose(0, 3, 1, 2)
        return out, (x.shape, cols)

    def backward(self, dout, cache):
        x_shape, cols = cache
        n, channels, height, width = x_shape
        k = self.kernel_size
        out_h, out_w = dout.shape[2], dout.shape[3]
        dout_rows = dout.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)
        weights = self.params["W"].reshape(self.out_channels, -1)
        grads = {
            "W": (dout_rows.T @ cols).reshape(self.params["W"].shape),
            "b": dout_rows.sum(axis=0),
        }
        dcols = (dout_rows @ weights).reshape(n, out_h, out_w, channels, k, k)
        dx = np.zeros(x_shape)
        for i in range(k):
            for j in range(k):
                dx[:, :, i:i + out_h, j:j + out_w] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dx, grads

    def describe(self):
        return {"kind": self.kind, "in": self.in_channels, "out": self.out_channels, "kernel": self.kernel_size}


class MaxPool2D(Layer):
    """2x2 max pooling with stride 2; odd trailing rows/columns are dropped."""
    kind = "maxpool"

    def output_shape(self, input_shape):
        if len(input_shape) != 3:
            raise ModelError(f"Max pooling expects (C, H, W), got {input_shape}")
        channels, height, width = input_shape
        return (channels, height // 2, width // 2)

    def _windows(self, x):
        n, channels, height, width = x.shape
        out_h, out_w = height // 2, width // 2
        cropped = x[:, :, :2 * out_h, :2 * out_w]
        return cropped.reshape(n, channels, out_h, 2, out_w, 2).transpose(0, 1, 2, 4, 3, 5).reshape(
            n, channels, out_h, out_w, 4
        )

    def forward(self, x, train=False, rng=None):
        windows = self._windows(x)
        # First maximum wins, so each window routes its gradient to one input
        winner = windows.argmax(axis=-1)
        out = np.take_along_axis(windows, winner[..., None], axis=-1)[..., 0]
        return out, (x.shape, winner)

    def backward(self, dout, cache):
        x_shape, winner = cache
        n, channels, height, width = x_shape
        out_h, out_w = height // 2, width // 2
        routed = np.zeros((n, channels, out_h, out_w, 4))
        np.put_along_axis(routed, winner[..., None], dout[..., None], axis=-1)
        dx = np.zeros(x_shape)
        dx[:, :, :2 * out_h, :2 * out_w] = routed.reshape(n, channels, out_h, out_w, 2, 2).transpose(
            0, 1, 2, 4, 3, 5
        ).reshape(n, channels, 2 * out_h, 2 * out_w)
        return dx, {}


class Dropout(Layer):
    """Inverted dropout: train-time masks are scaled by 1/(1-p), eval is the identity."""
    kind = "dropout"

    def __init__(self, p: float):
        super().__init__()
        if not 0 <= p < 1:
            raise ModelError(f"Dropout rate must lie in [0, 1), got {p}")
        self.p = p

    def forward(self, x, train=False, rng=None):
        if not train or self.p == 0:
            return x, None
        if rng is None:
            raise ModelError("Dropout in train mode needs an Rng")
        mask = (rng.uniform(x.size).reshape(x.shape) >= self.p) / (1.0 - self.p)
        return x * mask, mask

    def backward(self, dout, cache):
        if cache is None:
            return dout, {}
        return dout * cache, {}

    def describe(self):
        return {"kind": self.kind, "p": self.p}


class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)

    def forward(self, x, train=False, rng=None):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dout, cache):
        return dout.reshape(cache), {}
