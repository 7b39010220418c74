"""
Run metadata tracking using a JSON-lines sidecar.

Each executed stage appends one line to run_metadata.jsonl in the output
directory. Wall-clock timestamps live only here, so every other output of a
run depends on nothing but its configuration and seeds.
"""
import os
import json
import time
from datetime import datetime
from typing import Dict, Any, List, Optional
from dataclasses import dataclass, asdict, field
import logging

logger = logging.getLogger(__name__)

METADATA_FILE = "run_metadata.jsonl"


@dataclass
class StageMetrics:
    """Metrics for a single stage of a run"""
    stage: str
    start_time: str
    end_time: str
    latency_ms: float
    success: bool
    error: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


class MetricsTracker:
    """Appends stage metrics to the run metadata sidecar and aggregates them"""

    def __init__(self, output_dir: str):
        self.output_dir = output_dir
        self.metrics_file = os.path.join(output_dir, METADATA_FILE)

    def track_stage(
        self,
        stage: str,
        start_time: float,
        success: bool,
        error: Optional[str] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> StageMetrics:
        """Record one stage that started at start_time (seconds since the epoch)"""
        end_time = time.time()
        metrics = StageMetrics(
            stage=stage,
            start_time=datetime.fromtimestamp(start_time).isoformat(),
            end_time=datetime.fromtimestamp(end_time).isoformat(),
            latency_ms=(end_time - start_time) * 1000,
            success=success,
            error=error,
            metadata=metadata or {},
        )
        try:
            os.makedirs(self.output_dir, exist_ok=True)
            with open(self.metrics_file, 'a') as f:
                f.write(json.dumps(asdict(metrics), sort_keys=True) + '\n')
        except OSError as e:
            logger.error(f"Failed to write run metadata: {e}")
        return metrics

    def read_entries(self) -> List[Dict[str, Any]]:
        if not os.path.exists(self.metrics_file):
            return []
        entries = []
        with open(self.metrics_file, 'r') as f:
            for line in f:
                if line.strip():
                    entries.append(json.loads(line))
        return entries

    def get_stage_metrics(self) -> Dict[str, Any]:
        """Calls, success rate and mean latency, overall and per stage"""
        metrics = {
            "total_calls": 0,
            "success_rate": 0.0,
            "avg_latency_ms": 0.0,
            "by_stage": {},
        }
        for data in self.read_entries():
            metrics["total_calls"] += 1
            metrics["avg_latency_ms"] += data["latency_ms"]
            stage = metrics["by_stage"].setdefault(data["stage"], {
                "calls": 0,
                "successes": 0,
                "failures": 0,
                "avg_latency_ms": 0.0,
            })
            stage["calls"] += 1
            if data["success"]:
                stage["successes"] += 1
            else:
                stage["failures"] += 1
            stage["avg_latency_ms"] += data["latency_ms"]

        if metrics["total_calls"] > 0:
            metrics["avg_latency_ms"] /= metrics["total_calls"]
            metrics["success_rate"] = sum(
                s["successes"] for s in metrics["by_stage"].values()
            ) / metrics["total_calls"]
            for stage in metrics["by_stage"].values():
                stage["avg_latency_ms"] /= stage["calls"]
        return metrics
