"""
Deterministic JSON text for concept files and reports.

Floats are written with 17 significant digits so every float64 survives a
round trip bit for bit; keys keep insertion order.
"""
import json
import math
from typing import Any

import numpy as np

from src.numerics.errors import NumericsError


def format_float(value: float) -> str:
    """17-significant-digit text for a finite float."""
    value = float(value)
    if not math.isfinite(value):
        raise NumericsError(f"Cannot serialize non-finite value {value}")
    text = format(value, ".17g")
    if "e" not in text and "." not in text:
        text += ".0"
    return text


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # Numeric lists stay on one line
        if all(isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool) for x in obj):
            return "[" + ", ".join(_encode(x, indent, level + 1) for x in obj) + "]"
        items = [f"{pad}{_encode(x, indent, level + 1)}" for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    raise NumericsError(f"Cannot serialize object of type {type(obj).__name__}")


def dumps_json(obj: Any, indent: int = 2) -> str:
    """Serialize obj to deterministic JSON text ending in a newline."""
    return _encode(obj, indent, 0) + "\n"


def loads_json(text: str) -> Any:
    """Parse JSON text produced by dumps_json."""
    return json.loads(text)
