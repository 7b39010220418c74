"""
Flat key = value config files.

Keys mirror long flag names (without the leading dashes), '#' starts a
comment, list values are separated by whitespace or commas.
"""
import os
import logging
from typing import Any, Dict, List, Mapping

from src.config.errors import ConfigError

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_FILE = "resolved_config.txt"


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{number}: empty key")
        if key in values:
            raise ConfigError(f"{source}:{number}: duplicate key {key!r}")
        values[key] = value
    return values


def read_config_file(path: str) -> Dict[str, str]:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    values = parse_config_text(text, source=path)
    logger.debug(f"Read {len(values)} keys from {path}")
    return values


def split_list(value: str) -> List[str]:
    return value.replace(",", " ").split()


def format_value(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return " ".join(format_value(v) for v in value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def format_config(values: Mapping[str, Any]) -> str:
    """Sorted key = value lines; None values are left out."""
    lines = [
        f"{key} = {format_value(value)}"
        for key, value in sorted(values.items())
        if value is not None
    ]
    return "\n".join(lines) + "\n"


def write_resolved_config(values: Mapping[str, Any], output_dir: str) -> str:
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, RESOLVED_CONFIG_FILE)
    with open(path, "w") as f:
        f.write(format_config(values))
    return path
