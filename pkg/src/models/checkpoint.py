"""
Model checkpoints.

Binary layout (little-endian):
    magic        8 bytes  b"PCAVNN1\\0"
    header       u32 layer count, u32 classes, u64 init seed, u32 input rank
    input shape  rank x u32
    descriptors  per layer: u8 kind, 3 x u32 ints, f64 float
    parameters   per layer, W then b, raw float64 blocks
"""
import os
import struct
import logging
from typing import List

import numpy as np

from src.models.errors import ModelError
from src.models.layers import Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2D, ReLU
from src.models.network import NetworkModel
from src.numerics.rng import Rng

logger = logging.getLogger(__name__)

MAGIC = b"PCAVNN1\0"
_HEADER = struct.Struct("<IIQI")
_DESCRIPTOR = struct.Struct("<B3Id")
_KIND_CODES = {"dense": 1, "relu": 2, "conv2d": 3, "maxpool": 4, "dropout": 5, "flatten": 6}
_CODE_KINDS = {code: kind for kind, code in _KIND_CODES.items()}


def _descriptor(layer: Layer) -> bytes:
    info = layer.describe()
    kind = info["kind"]
    ints = (0, 0, 0)
    real = 0.0
    if kind == "dense":
        ints = (info["in"], info["out"], 0)
    elif kind == "conv2d":
        ints = (info["in"], info["out"], info["kernel"])
    elif kind == "dropout":
        real = info["p"]
    return _DESCRIPTOR.pack(_KIND_CODES[kind], *ints, real)


def _layer_from(code: int, ints, real: float, rng: Rng) -> Layer:
    kind = _CODE_KINDS.get(code)
    if kind == "dense":
        return Dense(ints[0], ints[1], rng)
    if kind == "conv2d":
        return Conv2D(ints[0], ints[1], rng, kernel_size=ints[2])
    if kind == "dropout":
        return Dropout(real)
    if kind == "relu":
        return ReLU()
    if kind == "maxpool":
        return MaxPool2D()
    if kind == "flatten":
        return Flatten()
    raise ModelError(f"Unknown layer code {code} in checkpoint")


def save_model(model: NetworkModel, path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_HEADER.pack(len(model.layers), model.num_classes, model.rng_seed, len(model.input_shape)))
        f.write(struct.pack(f"<{len(model.input_shape)}I", *model.input_shape))
        for layer in model.layers:
            f.write(_descriptor(layer))
        for layer in model.layers:
            for name in ("W", "b"):
                if name in layer.params:
                    f.write(np.ascontiguousarray(layer.params[name], dtype="<f8").tobytes())
    logger.debug(f"Saved model with {len(model.layers)} layers to {path}")


def load_model(path: str) -> NetworkModel:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:len(MAGIC)] != MAGIC:
        raise ModelError(f"{path} is not a model checkpoint (bad magic)")
    offset = len(MAGIC)
    try:
        num_layers, num_classes, seed, rank = _HEADER.unpack_from(blob, offset)
        offset += _HEADER.size
        input_shape = struct.unpack_from(f"<{rank}I", blob, offset)
        offset += 4 * rank
        descriptors = []
        for _ in range(num_layers):
            descriptors.append(_DESCRIPTOR.unpack_from(blob, offset))
            offset += _DESCRIPTOR.size
    except struct.error as e:
        raise ModelError(f"{path} is truncated") from e
    rng = Rng(seed).spawn("init")
    layers: List[Layer] = [_layer_from(code, (a, b, c), real, rng) for code, a, b, c, real in descriptors]
    for layer in layers:
        for name in ("W", "b"):
            if name in layer.params:
                shape = layer.params[name].shape
                count = int(np.prod(shape))
                if offset + 8 * count > len(blob):
                    raise ModelError(f"{path} is truncated")
                values = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
                layer.params[name] = values.astype(np.float64).reshape(shape)
                offset += 8 * count
    if offset != len(blob):
        raise ModelError(f"{path} has {len(blob) - offset} trailing bytes")
    return NetworkModel(layers, tuple(input_shape), num_classes, rng_seed=seed)
