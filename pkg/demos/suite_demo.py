"""
Demo of a small controlled poisoning run: one target class, two seeds,
P-ClArC with all three concept vector kinds at the input and after layer 1.
"""
import os
import time
import logging

from dotenv import load_dotenv

from src.experiments.config import DatasetConfig, ExperimentConfig
from src.experiments.controlled import run_controlled_suite
from src.experiments.report import render_report
from src.models.optimizers import OptimizerConfig
from src.observability.metrics import MetricsTracker

load_dotenv()
logging.basicConfig(
    level=logging.DEBUG if int(os.getenv("DEBUG_LEVEL", "0")) > 0 else logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)


def main():
    output_dir = "demo_suite"
    cfg = ExperimentConfig(
        dataset=DatasetConfig.for_run("clever_hans", "box", n_train_per_class=200, n_test_per_class=50),
        targets=(0,),
        seeds=(0, 1),
        corrections=("original", "pclarc"),
        optimizer=OptimizerConfig(epochs=3),
    )

    metrics = MetricsTracker(output_dir)
    start = time.time()
    report = run_controlled_suite(cfg)
    metrics.track_stage("suite", start, success=True, metadata={"cells": len(report.cells)})

    os.makedirs(output_dir, exist_ok=True)
    with open(os.path.join(output_dir, "report.md"), "w") as f:
        f.write(render_report(report, "markdown"))

    print(render_report(report, "markdown"))
    print(f"Suite took {metrics.get_stage_metrics()['by_stage']['suite']['avg_latency_ms'] / 1000:.1f} s")


if __name__ == "__main__":
    main()
