"""
Demo of the 2-D toy experiment: where the filter and pattern vectors point
as the distractor rotates, and where each moves a corrected artifact sample.
"""
import os
import logging

from dotenv import load_dotenv

from src.experiments.toy_figure import run_toy_figure, toy_basename
from src.toygen.toy import ToyConfig

load_dotenv()
logging.basicConfig(
    level=logging.DEBUG if int(os.getenv("DEBUG_LEVEL", "0")) > 0 else logging.WARNING,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)


def main():
    output_dir = "demo_toy"
    configs = [ToyConfig.from_degrees(tau) for tau in (0.0, 45.0, 90.0, 135.0)]

    print("Running toy sweep...")
    report = run_toy_figure(configs, output_dir)

    print(f"\n{'tau':>6} {'filter':>8} {'pattern':>8}  corrected (filter / pattern)")
    for result in report.results:
        print(
            f"{result.tau_deg:6.0f} {result.angle_filter_deg:8.2f} {result.angle_pattern_deg:8.2f}  "
            f"{result.corrected['filter']['class']} / {result.corrected['pattern']['class']}"
        )

    print("\nFigures:")
    for result in report.results:
        print(f"- {os.path.join(output_dir, toy_basename(result.tau_deg))}.svg")


if __name__ == "__main__":
    main()
