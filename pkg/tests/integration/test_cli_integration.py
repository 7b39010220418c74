import json

import pytest

from src.cli.main import main
from src.concepts.concept_vector import load_concept
from src.datasets.io import load_dataset
from src.observability.metrics import METADATA_FILE


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Generated, poisoned and trained artifacts shared by the pipeline tests."""
    root = tmp_path_factory.mktemp("pipeline")
    data, model_dir = root / "data", root / "model"
    assert run("gen", "-o", data, "--classes", 3, "--shape", 1, 8, 8,
               "--n-train", 40, "--n-test", 10, "--seed", 1, "--csv") == 0
    assert run("poison", "-o", data, "--input", data / "train.bin", "--attack", "clever-hans",
               "--target", 0, "--rate", 0.2) == 0
    assert run("poison", "-o", data, "--input", data / "test.bin", "--attack", "test",
               "--name", "test_poisoned.bin") == 0
    assert run("train", "-o", model_dir, "--train", data / "poisoned.bin", "--arch", "dense",
               "--hidden", 16, "--epochs", 3, "--eval", data / "test.bin") == 0
    return root


@pytest.mark.integration
class TestPipelineIntegration:
    """gen -> poison -> train -> fit-cav -> correct -> eval -> logits -> neighbors."""

    def test_generated_files(self, workspace):
        data = workspace / "data"
        train_ds = load_dataset(str(data / "train.bin"))
        assert train_ds.n == 120
        assert (data / "test.csv").read_text().startswith("x0,")
        poisoned = load_dataset(str(data / "poisoned.bin"))
        assert int((poisoned.y_s == 1).sum()) == 8
        assert int((load_dataset(str(data / "test_poisoned.bin")).y_s == 1).sum()) == 30
        history = json.loads((workspace / "model" / "history.json").read_text())
        assert len(history["train_loss"]) == 3
        assert list(history["eval_accuracy"]) == ["test.bin"]

    def test_run_metadata(self, workspace):
        lines = (workspace / "data" / METADATA_FILE).read_text().splitlines()
        assert [json.loads(line)["stage"] for line in lines] == ["gen", "poison", "poison"]

    @pytest.mark.parametrize("kind,labels", [("pattern", "gt"), ("pattern", "predicted"), ("filter", "gt")])
    def test_fit_cav_at_input(self, workspace, tmp_path, kind, labels):
        assert run("fit-cav", "-o", tmp_path, "--data", workspace / "data" / "poisoned.bin", "--target", 0,
                   "--kind", kind, "--labels", labels) == 0
        concept = load_concept(str(tmp_path / "cav.json"))
        assert concept.kind == kind
        assert concept.dim == 64
        assert concept.label_source == ("predicted" if labels == "predicted" else "ground_truth")

    def test_projective_correction(self, workspace, tmp_path):
        data, model = workspace / "data", workspace / "model" / "model.bin"
        cav_dir, corrected = tmp_path / "cav", tmp_path / "corrected"
        assert run("fit-cav", "-o", cav_dir, "--data", data / "poisoned.bin", "--target", 0,
                   "--model", model, "--hook", "layer1") == 0
        assert load_concept(str(cav_dir / "cav.json")).dim == 16
        assert run("correct", "-o", corrected, "--model", model, "--cav", cav_dir / "cav.json",
                   "--mode", "pclarc") == 0
        correction = json.loads((corrected / "correction.json").read_text())
        assert correction["mode"] == "projective"
        assert run("eval", "-o", corrected, "--model", corrected / "model.bin",
                   "--data", data / "test.bin", data / "test_poisoned.bin",
                   "--correction", corrected / "correction.json") == 0
        accuracy = json.loads((corrected / "eval.json").read_text())["accuracy"]
        assert set(accuracy) == {"test.bin", "test_poisoned.bin"}
        assert all(0.0 <= value <= 1.0 for value in accuracy.values())

    def test_augmentive_correction(self, workspace, tmp_path):
        data, model = workspace / "data", workspace / "model" / "model.bin"
        assert run("fit-cav", "-o", tmp_path, "--data", data / "poisoned.bin", "--target", 0,
                   "--model", model, "--hook", "layer1") == 0
        assert run("correct", "-o", tmp_path / "tuned", "--model", model, "--cav", tmp_path / "cav.json",
                   "--mode", "aclarc", "--data", data / "poisoned.bin", "--finetune-epochs", 1) == 0
        history = json.loads((tmp_path / "tuned" / "history.json").read_text())
        assert len(history["train_loss"]) == 1
        assert (tmp_path / "tuned" / "model.bin").exists()

    def test_logits_and_neighbors(self, workspace, tmp_path):
        data, model = workspace / "data", workspace / "model" / "model.bin"
        assert run("fit-cav", "-o", tmp_path, "--data", data / "poisoned.bin", "--target", 0) == 0
        cav = tmp_path / "cav.json"
        assert run("logits", "-o", tmp_path, "--model", model, "--data", data / "test.bin",
                   "--cav", cav, "--target", 0, "--exclude-target") == 0
        logits = json.loads((tmp_path / "logits.json").read_text())
        assert logits["n_samples"] == 20
        assert set(logits["per_class"]) == {"1", "2"}
        assert run("neighbors", "-o", tmp_path, "--cav", cav, "--data", data / "poisoned.bin", "--k", 5) == 0
        neighbors = json.loads((tmp_path / "neighbors.json").read_text())
        assert len(neighbors["indices"]) == 5
        assert neighbors["scores"] == sorted(neighbors["scores"], reverse=True)

    def test_layer_hook_needs_model(self, workspace, tmp_path):
        assert run("fit-cav", "-o", tmp_path, "--data", workspace / "data" / "poisoned.bin",
                   "--target", 0, "--hook", "layer1") == 1

    def test_hook_mismatch_is_a_user_error(self, workspace, tmp_path):
        model = workspace / "model" / "model.bin"
        assert run("fit-cav", "-o", tmp_path, "--data", workspace / "data" / "poisoned.bin", "--target", 0,
                   "--model", model, "--hook", "layer5") == 1


@pytest.mark.integration
class TestGradcheckIntegration:

    @pytest.mark.parametrize("arch", ["dense", "conv"])
    def test_gradcheck(self, tmp_path, arch):
        assert run("gradcheck", "-o", tmp_path, "--arch", arch) == 0
        result = json.loads((tmp_path / "gradcheck.json").read_text())
        assert result["passed"] is True
        assert result["max_relative_error"] < 1e-4


@pytest.mark.integration
class TestToyCommandIntegration:

    def test_toy(self, tmp_path):
        assert run("toy", "-o", tmp_path, "--tau", 45, "--n", 2000) == 0
        assert (tmp_path / "toy_45.svg").exists()
        assert (tmp_path / "toy_45.json").exists()
        assert (tmp_path / "resolved_config.txt").read_text().count("tau = 45\n") == 1
