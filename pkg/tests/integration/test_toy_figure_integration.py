import json
import time

import numpy as np
import pytest

from src.experiments.toy_figure import run_toy_figure, toy_basename
from src.toygen.toy import ToyConfig


@pytest.fixture(scope="module")
def toy_report(tmp_path_factory):
    output_dir = tmp_path_factory.mktemp("toy")
    configs = [ToyConfig.from_degrees(tau) for tau in (0.0, 45.0, 135.0)]
    return run_toy_figure(configs, str(output_dir)), output_dir


@pytest.mark.integration
class TestToyFigureIntegration:
    """Filter and pattern concept vectors on the 2-D toy data."""

    def test_files_written(self, toy_report):
        report, output_dir = toy_report
        for tau in (0.0, 45.0, 135.0):
            svg = (output_dir / f"{toy_basename(tau)}.svg").read_text()
            assert svg.startswith("<?xml")
            data = json.loads((output_dir / f"{toy_basename(tau)}.json").read_text())
            assert data["tau_deg"] == pytest.approx(tau)
            assert set(data["corrected"]) == {"filter", "pattern"}
        assert [r.tau_deg for r in report.results] == pytest.approx([0.0, 45.0, 135.0])

    def test_orthogonal_distractor(self, toy_report):
        result = toy_report[0].by_tau(0.0)
        assert result.angle_filter_deg < 3.0
        assert result.angle_pattern_deg < 3.0

    @pytest.mark.parametrize("tau", [45.0, 135.0])
    def test_filter_follows_distractor(self, toy_report, tau):
        result = toy_report[0].by_tau(tau)
        assert result.angle_pattern_deg < 2.0
        assert result.angle_filter_deg > result.angle_pattern_deg + 5.0

    def test_filter_correction_crosses_boundary(self, toy_report):
        result = toy_report[0].by_tau(45.0)
        assert result.probe_class == "A"
        assert result.corrected["pattern"]["class"] == "A"
        assert result.corrected["filter"]["class"] == "B"

    @pytest.mark.parametrize("tau", [0.0, 135.0])
    def test_pattern_correction_keeps_class(self, toy_report, tau):
        result = toy_report[0].by_tau(tau)
        assert result.corrected["pattern"]["class"] == "A"


@pytest.mark.slow
@pytest.mark.integration
class TestToySeedsIntegration:
    """The toy claims hold on every one of ten seeds."""

    SEEDS = tuple(range(10))

    @pytest.fixture(scope="class")
    def reports(self):
        return {
            tau: run_toy_figure([ToyConfig.from_degrees(tau, rng_seed=seed) for seed in self.SEEDS])
            for tau in (0.0, 45.0, 135.0)
        }

    def test_pattern_angle_small(self, reports):
        for report in reports.values():
            assert all(r.angle_pattern_deg < 2.0 for r in report.results)

    def test_filter_angle_exceeds_pattern_angle(self, reports):
        results = reports[45.0].results
        filter_median = np.median([r.angle_filter_deg for r in results])
        pattern_median = np.median([r.angle_pattern_deg for r in results])
        assert filter_median >= pattern_median + 5.0

    def test_only_filter_correction_crosses(self, reports):
        for result in reports[45.0].results:
            assert result.probe_class == "A"
            assert result.corrected["filter"]["class"] == "B"
            assert result.corrected["pattern"]["class"] == "A"

    @pytest.mark.parametrize("tau", [0.0, 135.0])
    def test_pattern_correction_never_crosses(self, reports, tau):
        assert all(r.corrected["pattern"]["class"] == "A" for r in reports[tau].results)

    def test_runtime_per_seed(self):
        start = time.perf_counter()
        run_toy_figure([ToyConfig.from_degrees(tau) for tau in (0.0, 45.0, 135.0)])
        assert time.perf_counter() - start < 30.0
