"""
Sequential network with hook support.

A hook point "after_layer(k)" sits after the k-th trainable layer (dense or
conv) and after its ReLU when one follows directly. Position p in the layer
list means "before layers[p]"; position 0 is the input.
"""
import copy
import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.clarc.maps import ClarcHook, apply_hook_batch
from src.concepts.concept_vector import HookPoint
from src.models.errors import ModelError
from src.models.layers import Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2D, ReLU
from src.numerics.rng import Rng

logger = logging.getLogger(__name__)

MODES = ("train", "eval")


@dataclass
class ForwardCache:
    """Per-layer caches and activations; activations[p] is the input of layers[p]."""
    layer_caches: List[Any]
    activations: List[np.ndarray]
    hook: Optional[ClarcHook] = None
    hook_position: Optional[int] = None
    hook_rows: Optional[np.ndarray] = None


class NetworkModel:
    """Ordered layers mapping inputs of input_shape to num_classes logits."""

    def __init__(self, layers: Sequence[Layer], input_shape: Tuple[int, ...], num_classes: int, rng_seed: int = 0):
        self.layers = list(layers)
        self.input_shape = tuple(int(s) for s in input_shape)
        self.num_classes = num_classes
        self.rng_seed = rng_seed
        shape = self.input_shape
        self.shapes = [shape]
        for layer in self.layers:
            shape = layer.output_shape(shape)
            self.shapes.append(shape)
        if shape != (num_classes,):
            raise ModelError(f"Final layer outputs {shape}, expected ({num_classes},)")

    @property
    def input_dim(self) -> int:
        return int(np.prod(self.input_shape))

    def copy(self) -> "NetworkModel":
        return copy.deepcopy(self)

    def parameters(self) -> Iterator[Tuple[int, str, np.ndarray]]:
        """(layer index, name, array) for every parameter tensor."""
        for index, layer in enumerate(self.layers):
            for name, value in layer.params.items():
                yield index, name, value

    def hook_position(self, point: HookPoint) -> int:
        """Layer-list position of a hook point."""
        if point.is_input:
            return 0
        seen = 0
        for index, layer in enumerate(self.layers):
            if layer.trainable:
                seen += 1
                if seen == point.layer:
                    position = index + 1
                    if position < len(self.layers) and isinstance(self.layers[position], ReLU):
                        position += 1
                    if position >= len(self.layers):
                        raise ModelError(f"hook mismatch: {point} is the model output")
                    return position
        raise ModelError(f"hook mismatch: model has {seen} trainable layers, no {point}")

    def feature_dim(self, point: HookPoint) -> int:
        return int(np.prod(self.shapes[self.hook_position(point)]))

    def _as_input(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        n = X.shape[0]
        if int(np.prod(X.shape[1:])) != self.input_dim:
            raise ModelError(f"shape mismatch: samples of size {int(np.prod(X.shape[1:]))}, model expects {self.input_shape}")
        return X.reshape((n,) + self.input_shape)

    def forward(
        self,
        X: np.ndarray,
        hook: Optional[ClarcHook] = None,
        mode: str = "eval",
        rng: Optional[Rng] = None,
        hook_rows: Optional[np.ndarray] = None,
        stop_at: Optional[int] = None,
    ) -> Tuple[np.ndarray, ForwardCache]:
        """
        Run the network on a batch.

        If hook is given, activations at its position are rewritten by the
        hook's map before the next layer; hook_rows restricts the rewrite to
        a boolean row mask. stop_at ends the pass early at that position.
        """
        if mode not in MODES:
            raise ModelError(f"Unknown mode: {mode}")
        train = mode == "train"
        position = self.hook_position(hook.point) if hook is not None else None
        h = self._as_input(X)
        cache = ForwardCache(layer_caches=[], activations=[], hook=hook, hook_position=position, hook_rows=hook_rows)
        end = len(self.layers) if stop_at is None else stop_at
        for index in range(end + 1):
            if index == position:
                h = self._apply_hook(h, hook, hook_rows)
            cache.activations.append(h)
            if index == end:
                break
            layer_rng = rng.spawn("layer", index) if (train and rng is not None) else None
            h, layer_cache = self.layers[index].forward(h, train=train, rng=layer_rng)
            cache.layer_caches.append(layer_cache)
        return h, cache

    @staticmethod
    def _apply_hook(h: np.ndarray, hook: ClarcHook, rows: Optional[np.ndarray]) -> np.ndarray:
        if rows is None:
            return apply_hook_batch(h, hook)
        rows = np.asarray(rows, dtype=bool)
        if not rows.any():
            return h
        out = np.array(h, copy=True)
        out[rows] = apply_hook_batch(h[rows], hook)
        return out

    def forward_from(self, position: int, H: np.ndarray) -> np.ndarray:
        """Eval-mode logits for activations H that sit at a layer-list position."""
        H = np.asarray(H, dtype=np.float64)
        h = H.reshape((H.shape[0],) + self.shapes[position])
        for layer in self.layers[position:]:
            h, _ = layer.forward(h, train=False)
        return h

    def backward(
        self,
        cache: ForwardCache,
        dlogits: np.ndarray,
        stop_at: int = 0,
    ) -> Dict[Tuple[int, str], np.ndarray]:
        """Parameter gradients of layers at positions >= stop_at."""
        grads: Dict[Tuple[int, str], np.ndarray] = {}
        dout = dlogits
        for index in range(len(self.layers) - 1, stop_at - 1, -1):
            dout, layer_grads = self.layers[index].backward(dout, cache.layer_caches[index])
            for name, grad in layer_grads.items():
                grads[(index, name)] = grad
            if index == cache.hook_position and index > stop_at:
                dout = self._hook_backward(dout, cache)
        return grads

    @staticmethod
    def _hook_backward(dout: np.ndarray, cache: ForwardCache) -> np.ndarray:
        if cache.hook_rows is None:
            return cache.hook.backward(dout)
        rows = np.asarray(cache.hook_rows, dtype=bool)
        out = np.array(dout, copy=True)
        if rows.any():
            out[rows] = cache.hook.backward(dout[rows])
        return out

    def describe(self) -> List[Dict[str, Any]]:
        return [layer.describe() for layer in self.layers]


def softmax_cross_entropy(logits: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy of integer labels and its gradient w.r.t. the logits."""
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    loss = float(-log_probs[np.arange(n), y].mean())
    dlogits = np.exp(log_probs)
    dlogits[np.arange(n), y] -= 1.0
    return loss, dlogits / n


def build_conv_model(
    input_shape: Tuple[int, int, int] = (1, 16, 16),
    num_classes: int = 10,
    conv_channels: Tuple[int, int] = (8, 16),
    hidden: int = 64,
    dropout: Tuple[float, float] = (0.25, 0.5),
    rng_seed: int = 0,
) -> NetworkModel:
    """conv -> relu -> conv -> relu -> maxpool -> dropout -> flatten -> dense -> relu -> dropout -> dense."""
    rng = Rng(rng_seed).spawn("init")
    channels = input_shape[0]
    first, second = conv_channels
    probe = [Conv2D(channels, first, rng), ReLU(), Conv2D(first, second, rng), ReLU(), MaxPool2D()]
    shape = tuple(input_shape)
    for layer in probe:
        shape = layer.output_shape(shape)
    flat = int(np.prod(shape))
    layers = probe + [
        Dropout(dropout[0]),
        Flatten(),
        Dense(flat, hidden, rng),
        ReLU(),
        Dropout(dropout[1]),
        Dense(hidden, num_classes, rng),
    ]
    return NetworkModel(layers, input_shape, num_classes, rng_seed=rng_seed)


def build_dense_model(
    input_dim: int,
    num_classes: int,
    hidden: Sequence[int] = (64,),
    dropout: float = 0.0,
    rng_seed: int = 0,
) -> NetworkModel:
    """Fully connected ReLU network; hidden=() gives softmax regression."""
    rng = Rng(rng_seed).spawn("init")
    layers: List[Layer] = []
    width = input_dim
    for size in hidden:
        layers += [Dense(width, size, rng), ReLU()]
        if dropout > 0:
            layers.append(Dropout(dropout))
        width = size
    layers.append(Dense(width, num_classes, rng))
    return NetworkModel(layers, (input_dim,), num_classes, rng_seed=rng_seed)
