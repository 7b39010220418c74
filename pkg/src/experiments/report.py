"""
Suite reports and their JSON, CSV and markdown renderings.

Schema "report_v1":
    schema       "report_v1"
    config       the ExperimentConfig as plain data
    cells        one entry per (target, seed, correction, cav_kind, hook)
    details      per (target, seed): filter/pattern cosines, SVM fits, logit probes
    aggregates   mean/min/max over targets x seeds per (correction, cav_kind, hook)
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from src.experiments.errors import ExperimentError
from src.numerics.serialization import dumps_json, format_float

logger = logging.getLogger(__name__)

SCHEMA = "report_v1"
FORMATS = ("json", "csv", "markdown")
NO_CAV = "none"

CELL_COLUMNS = ("target", "seed", "correction", "cav_kind", "hook", "clean_accuracy", "poisoned_accuracy")
AGGREGATE_COLUMNS = (
    "correction", "cav_kind", "hook", "n",
    "clean_mean", "clean_min", "clean_max",
    "poisoned_mean", "poisoned_min", "poisoned_max",
)

AggregateKey = Tuple[str, str, str]


@dataclass
class CellResult:
    """Clean and poisoned test accuracy of one corrected model."""
    target: int
    seed: int
    correction: str
    cav_kind: str = NO_CAV
    hook: str = NO_CAV
    clean_accuracy: float = 0.0
    poisoned_accuracy: float = 0.0
    epoch_poisoned_accuracy: List[float] = field(default_factory=list)

    @property
    def key(self) -> AggregateKey:
        return (self.correction, self.cav_kind, self.hook)


@dataclass
class ExperimentReport:
    config: Dict[str, Any]
    cells: List[CellResult] = field(default_factory=list)
    details: List[Dict[str, Any]] = field(default_factory=list)

    def aggregates(self) -> List[Dict[str, Any]]:
        """Mean, min and max over targets and seeds, in first-appearance order."""
        groups: Dict[AggregateKey, List[CellResult]] = {}
        for cell in self.cells:
            groups.setdefault(cell.key, []).append(cell)
        rows = []
        for (correction, cav_kind, hook), cells in groups.items():
            clean = np.array([c.clean_accuracy for c in cells])
            poisoned = np.array([c.poisoned_accuracy for c in cells])
            rows.append({
                "correction": correction,
                "cav_kind": cav_kind,
                "hook": hook,
                "n": len(cells),
                "clean_mean": float(clean.mean()),
                "clean_min": float(clean.min()),
                "clean_max": float(clean.max()),
                "poisoned_mean": float(poisoned.mean()),
                "poisoned_min": float(poisoned.min()),
                "poisoned_max": float(poisoned.max()),
            })
        return rows

    def aggregate(self, correction: str, cav_kind: str = NO_CAV, hook: str = NO_CAV) -> Dict[str, Any]:
        for row in self.aggregates():
            if (row["correction"], row["cav_kind"], row["hook"]) == (correction, cav_kind, hook):
                return row
        raise ExperimentError(f"No cells for correction={correction}, cav_kind={cav_kind}, hook={hook}")

    def select(self, **criteria) -> List[CellResult]:
        return [c for c in self.cells if all(getattr(c, k) == v for k, v in criteria.items())]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": SCHEMA,
            "config": self.config,
            "cells": [asdict(cell) for cell in self.cells],
            "details": self.details,
            "aggregates": self.aggregates(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentReport":
        if data.get("schema") != SCHEMA:
            raise ExperimentError(f"Unsupported report schema: {data.get('schema')}")
        report = cls(
            config=data["config"],
            cells=[CellResult(**cell) for cell in data["cells"]],
            details=list(data.get("details", [])),
        )
        stored = data.get("aggregates")
        if stored is not None and len(stored) != len(report.aggregates()):
            raise ExperimentError("Stored aggregates do not match the cells")
        return report


def _csv(report: ExperimentReport) -> str:
    lines = [",".join(CELL_COLUMNS)]
    for cell in report.cells:
        lines.append(",".join([
            str(cell.target),
            str(cell.seed),
            cell.correction,
            cell.cav_kind,
            cell.hook,
            format_float(cell.clean_accuracy),
            format_float(cell.poisoned_accuracy),
        ]))
    return "\n".join(lines) + "\n"


def _markdown_table(columns, rows) -> List[str]:
    lines = [
        "| " + " | ".join(columns) + " |",
        "|" + "|".join("---" for _ in columns) + "|",
    ]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return lines


def _markdown(report: ExperimentReport) -> str:
    rows = [
        [str(c.target), str(c.seed), c.correction, c.cav_kind, c.hook,
         f"{c.clean_accuracy:.3f}", f"{c.poisoned_accuracy:.3f}"]
        for c in report.cells
    ]
    lines = _markdown_table(CELL_COLUMNS, rows)
    aggregates = report.aggregates()
    if aggregates:
        lines += ["", "Aggregates over targets and seeds:", ""]
        lines += _markdown_table(AGGREGATE_COLUMNS, [
            [a["correction"], a["cav_kind"], a["hook"], str(a["n"])]
            + [f"{a[name]:.3f}" for name in AGGREGATE_COLUMNS[4:]]
            for a in aggregates
        ])
    return "\n".join(lines) + "\n"


def render_report(report: ExperimentReport, fmt: str = "json") -> str:
    """Render a report; fields keep a stable order in every format."""
    if fmt == "json":
        return dumps_json(report.to_dict())
    if fmt == "csv":
        return _csv(report)
    if fmt == "markdown":
        return _markdown(report)
    raise ExperimentError(f"Unknown report format: {fmt}. Must be one of {list(FORMATS)}")
