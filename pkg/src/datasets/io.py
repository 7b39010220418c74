"""
Dataset files.

Binary container layout (little-endian):
    magic      8 bytes   b"PCAVDS1\\0"
    header     5 x u32   n, K, C, H, W   (C = 0 marks plain n x W features)
    samples    n*C*H*W float64
    labels     n int32
    flags      n int8
Split and provenance live in a JSON sidecar "<file>.meta.json".
"""
import os
import struct
import logging
from typing import Optional

import numpy as np

from src.datasets.dataset import LabeledDataset
from src.datasets.errors import DatasetError
from src.numerics.serialization import dumps_json, format_float, loads_json

logger = logging.getLogger(__name__)

MAGIC = b"PCAVDS1\0"
_HEADER = struct.Struct("<5I")


def _meta_path(path: str) -> str:
    return path + ".meta.json"


def save_dataset(ds: LabeledDataset, path: str) -> None:
    """Write the binary container and its metadata sidecar."""
    if ds.channel_shape is None:
        channels, height, width = 0, 1, ds.dim
    else:
        channels, height, width = ds.channel_shape
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_HEADER.pack(ds.n, ds.num_classes, channels, height, width))
        f.write(np.ascontiguousarray(ds.samples, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(ds.y_c, dtype="<i4").tobytes())
        f.write(np.ascontiguousarray(ds.y_s, dtype="i1").tobytes())
    with open(_meta_path(path), "w") as f:
        f.write(dumps_json({"split": ds.split, "provenance": list(ds.provenance)}))
    logger.debug(f"Saved dataset ({ds.n} samples) to {path}")


def load_dataset(path: str, split: Optional[str] = None) -> LabeledDataset:
    """Read a dataset written by save_dataset; split overrides the sidecar."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:len(MAGIC)] != MAGIC:
        raise DatasetError(f"{path} is not a dataset file (bad magic)")
    offset = len(MAGIC)
    if len(blob) < offset + _HEADER.size:
        raise DatasetError(f"{path} is truncated: {len(blob)} bytes, header needs {offset + _HEADER.size}")
    n, num_classes, channels, height, width = _HEADER.unpack_from(blob, offset)
    offset += _HEADER.size
    dim = (channels or 1) * height * width
    expected = offset + n * dim * 8 + n * 4 + n
    if len(blob) != expected:
        raise DatasetError(f"{path} is truncated or corrupt: {len(blob)} bytes, expected {expected}")
    samples = np.frombuffer(blob, dtype="<f8", count=n * dim, offset=offset).reshape(n, dim)
    offset += n * dim * 8
    y_c = np.frombuffer(blob, dtype="<i4", count=n, offset=offset)
    offset += n * 4
    y_s = np.frombuffer(blob, dtype="i1", count=n, offset=offset)

    meta = {"split": "train", "provenance": []}
    if os.path.exists(_meta_path(path)):
        with open(_meta_path(path)) as f:
            meta.update(loads_json(f.read()))
    return LabeledDataset(
        samples=samples,
        y_c=y_c,
        y_s=y_s,
        split=split or meta["split"],
        num_classes=num_classes,
        channel_shape=(channels, height, width) if channels else None,
        provenance=tuple(meta["provenance"]),
    )


def export_csv(ds: LabeledDataset, path: str) -> None:
    """One row per sample: flattened pixels, y_c, y_s."""
    header = [f"x{j}" for j in range(ds.dim)] + ["y_c", "y_s"]
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row, label, flag in zip(ds.samples, ds.y_c, ds.y_s):
            values = [format_float(v) for v in row] + [str(int(label)), str(int(flag))]
            f.write(",".join(values) + "\n")
