import time

import numpy as np
import pytest

from src.config.defaults import DATASET_DEFAULTS
from src.datasets.generate import gen_train_test
from src.experiments.config import DatasetConfig, ExperimentConfig
from src.experiments.controlled import run_controlled_suite
from src.experiments.report import NO_CAV, render_report
from src.models.network import build_dense_model
from src.models.optimizers import OptimizerConfig
from src.models.training import evaluate, train


def small_config(**changes):
    cfg = ExperimentConfig(
        dataset=DatasetConfig(num_classes=3, shape=(1, 8, 8), n_train_per_class=60, n_test_per_class=20),
        targets=(0,),
        seeds=(0,),
        r_ch=0.2,
        arch="dense",
        optimizer=OptimizerConfig(epochs=2, batch_size=32),
        finetune_epochs=1,
    )
    return cfg.with_changes(**changes)


@pytest.fixture(scope="module")
def small_report():
    return run_controlled_suite(small_config())


@pytest.mark.integration
class TestControlledSuiteIntegration:
    """End-to-end suite on a small dense setup."""

    def test_cells(self, small_report):
        keys = [cell.key for cell in small_report.cells]
        assert keys[:2] == [("original", NO_CAV, NO_CAV), ("baseline", NO_CAV, NO_CAV)]
        assert len(keys) == 2 + 2 * 3 * 2
        assert len(set(keys)) == len(keys)
        for cell in small_report.cells:
            assert 0.0 <= cell.clean_accuracy <= 1.0
            assert 0.0 <= cell.poisoned_accuracy <= 1.0
        for cell in small_report.select(correction="aclarc"):
            assert len(cell.epoch_poisoned_accuracy) == 1

    def test_every_correction_is_scored(self, small_report):
        corrections = {cell.correction for cell in small_report.cells}
        assert corrections == {"original", "baseline", "aclarc", "pclarc"}
        for correction in ("aclarc", "pclarc"):
            cells = small_report.select(correction=correction)
            assert {c.hook for c in cells} == {"input", "after_layer(1)"}
            assert {c.cav_kind for c in cells} == {"filter", "pattern_gt", "pattern_pred"}

    def test_details(self, small_report):
        details = small_report.details[0]
        assert [h["hook"] for h in details["hooks"]] == ["input", "after_layer(1)"]
        assert len(details["logit_probes"]) == 6
        for hook in details["hooks"]:
            assert -1.0 <= hook["filter_pattern_cosine"] <= 1.0
            assert 0.0 <= hook["predicted_artifact_agreement"] <= 1.0

    def test_original_row(self, small_report):
        original = small_report.select(correction="original")[0]
        assert original.cav_kind == NO_CAV
        assert small_report.aggregate("original")["n"] == 1

    def test_deterministic(self, small_report):
        again = run_controlled_suite(small_config())
        assert render_report(again, "json") == render_report(small_report, "json")

    def test_parallel_cells_match_serial(self):
        cfg = small_config(seeds=(0, 1), corrections=("original", "pclarc"), cav_kinds=("pattern_gt",))
        serial = run_controlled_suite(cfg)
        parallel = run_controlled_suite(cfg.with_changes(jobs=2))
        assert [c.poisoned_accuracy for c in parallel.cells] == [c.poisoned_accuracy for c in serial.cells]
        assert [(c.seed, c.correction) for c in parallel.cells] == [(c.seed, c.correction) for c in serial.cells]

    def test_backdoor_and_shift(self):
        cfg = small_config(
            attack="backdoor", r_bd=0.1, artifact="shift", shift_source_class=2,
            corrections=("original", "pclarc"), cav_kinds=("filter", "pattern_gt"), hook_points=("input",),
        )
        report = run_controlled_suite(cfg)
        assert [c.correction for c in report.cells] == ["original", "pclarc", "pclarc"]


@pytest.mark.integration
class TestCleanAccuracyIntegration:

    def test_generated_classes_are_learnable(self):
        train_ds, test_ds = gen_train_test()
        model = build_dense_model(train_ds.dim, DATASET_DEFAULTS["num_classes"], rng_seed=0)
        train(model, train_ds, OptimizerConfig(kind="sgd", lr=0.01, per_epoch_lr_factor=1.0, epochs=10))
        assert evaluate(model, test_ds) > 0.95


@pytest.mark.slow
@pytest.mark.integration
class TestCleverHansTrendIntegration:
    """Box artifact on the conv network across three targets and three seeds."""

    @pytest.fixture(scope="class")
    def timed_report(self):
        cfg = ExperimentConfig(
            corrections=("original", "baseline", "pclarc"),
            hook_points=("input", "layer1"),
            jobs=3,
        )
        start = time.perf_counter()
        report = run_controlled_suite(cfg)
        return report, time.perf_counter() - start

    @pytest.fixture(scope="class")
    def report(self, timed_report):
        return timed_report[0]

    def test_runtime(self, timed_report):
        assert timed_report[1] < 600.0

    def test_artifact_opens_gap(self, report):
        baseline = report.aggregate("baseline")
        assert baseline["clean_mean"] - baseline["poisoned_mean"] >= 0.15

    def test_pattern_projection_recovers_half_the_gap(self, report):
        baseline = report.aggregate("baseline")
        pattern = report.aggregate("pclarc", "pattern_gt", "input")
        gap = baseline["clean_mean"] - baseline["poisoned_mean"]
        assert pattern["poisoned_mean"] - baseline["poisoned_mean"] >= 0.5 * gap

    def test_pattern_not_worse_than_filter(self, report):
        for hook in ("input", "after_layer(1)"):
            pattern = report.aggregate("pclarc", "pattern_gt", hook)
            filtered = report.aggregate("pclarc", "filter", hook)
            assert pattern["poisoned_mean"] >= filtered["poisoned_mean"] - 0.01

    def test_projection_keeps_clean_accuracy(self, report):
        baseline = report.aggregate("baseline")
        pattern = report.aggregate("pclarc", "pattern_gt", "input")
        assert abs(pattern["clean_mean"] - baseline["clean_mean"]) <= 0.03

    @pytest.mark.parametrize("hook", ["input", "after_layer(1)"])
    def test_predicted_labels_match_ground_truth(self, report, hook):
        gt = report.aggregate("pclarc", "pattern_gt", hook)
        pred = report.aggregate("pclarc", "pattern_pred", hook)
        assert abs(gt["poisoned_mean"] - pred["poisoned_mean"]) <= 0.02

    def test_concept_raises_target_output(self, report):
        probes = [probe for details in report.details for probe in details["logit_probes"]]
        assert len(probes) == 9 * 3 * 2
        for probe in probes:
            assert probe["target_after"] > probe["target_before"]


@pytest.mark.slow
@pytest.mark.integration
class TestAugmentiveFinetuneTrendIntegration:
    """A-ClArC on the box artifact over three seeds."""

    @pytest.fixture(scope="class")
    def report(self):
        cfg = ExperimentConfig(
            targets=(0,),
            cav_kinds=("pattern_gt",),
            corrections=("original", "baseline", "aclarc"),
            hook_points=("input",),
            jobs=3,
        )
        return run_controlled_suite(cfg)

    def test_beats_baseline(self, report):
        baseline = report.aggregate("baseline")
        aclarc = report.aggregate("aclarc", "pattern_gt", "input")
        assert aclarc["poisoned_mean"] > baseline["poisoned_mean"]

    def test_first_epoch_carries_most_of_the_gain(self, report):
        start = report.aggregate("original")["poisoned_mean"]
        curves = np.array([c.epoch_poisoned_accuracy for c in report.select(correction="aclarc")])
        assert curves.shape == (3, 5)
        mean_curve = curves.mean(axis=0)
        total = mean_curve[-1] - start
        assert total > 0
        assert mean_curve[0] - start >= 0.6 * total


@pytest.mark.slow
@pytest.mark.integration
class TestBackdoorTrendIntegration:
    """Shift-triggered backdoor with one percent poisoned rows."""

    @pytest.fixture(scope="class")
    def report(self):
        cfg = ExperimentConfig.for_run(
            "backdoor", "shift",
            targets=(1,),
            cav_kinds=("filter", "pattern_gt"),
            corrections=("original", "baseline", "pclarc"),
            hook_points=("input", "layer1"),
            jobs=3,
        )
        return run_controlled_suite(cfg)

    def test_trigger_takes_hold(self, report):
        assert report.aggregate("baseline")["poisoned_mean"] < 0.3

    def test_pattern_beats_filter(self, report):
        hooks = ("input", "after_layer(1)")
        pattern = np.mean([report.aggregate("pclarc", "pattern_gt", h)["poisoned_mean"] for h in hooks])
        filtered = np.mean([report.aggregate("pclarc", "filter", h)["poisoned_mean"] for h in hooks])
        assert pattern > filtered
