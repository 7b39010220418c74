import numpy as np
import pytest

from src.config.errors import ConfigError
from src.experiments.config import DatasetConfig, ExperimentConfig
from src.experiments.svg import Plot, _clip_line, fmt_num
from src.experiments.toy_figure import fit_toy_classifier, pick_probe
from src.models.optimizers import OptimizerConfig
from src.toygen.toy import CLASS_PATTERN, SIGNAL_PATTERN, ToyConfig, generate_toy, noise_pattern


@pytest.mark.unit
class TestExperimentConfigUnit:

    def test_defaults_validate(self):
        cfg = ExperimentConfig()
        cfg.validate()
        assert cfg.poison_rate == 0.1
        assert [str(h) for h in cfg.hooks()] == ["input", "after_layer(1)"]

    def test_backdoor_rate(self):
        assert ExperimentConfig(attack="backdoor").poison_rate == 0.01

    def test_color_uses_rgb_shape(self):
        assert DatasetConfig.for_run("clever_hans", "color").shape == (3, 14, 14)
        assert DatasetConfig.for_run("clever_hans", "box").shape == (1, 16, 16)
        with pytest.raises(ConfigError, match="3-channel"):
            ExperimentConfig(artifact="color").validate()

    def test_per_attack_datasets(self):
        hans = DatasetConfig.for_run("clever_hans", "box")
        assert (hans.noise_sigma, hans.template_peak) == (0.3, 0.35)
        assert hans.n_train_per_class == 500
        backdoor = ExperimentConfig.for_run("backdoor", "shift", targets=(1,))
        assert backdoor.dataset.n_train_per_class == 1000
        assert backdoor.dataset.noise_sigma == 0.1
        assert backdoor.attack == "backdoor" and backdoor.targets == (1,)
        assert ExperimentConfig().dataset == hans
        explicit = DatasetConfig.for_run("clever_hans", "box", noise_sigma=0.2, template_peak=None)
        assert (explicit.noise_sigma, explicit.template_peak) == (0.2, 0.35)

    @pytest.mark.parametrize("changes,message", [
        ({"attack": "adversarial"}, "Unknown attack"),
        ({"r_ch": 0.0}, "r_ch"),
        ({"targets": (10,)}, "outside"),
        ({"seeds": (1, 1)}, "repeat"),
        ({"cav_kinds": ("pattern_pred",)}, "pattern_pred"),
        ({"hook_points": ("conv1",)}, "Unknown hook"),
        ({"corrections": ("retrain",)}, "Unknown correction"),
        ({"jobs": 0}, "jobs"),
        ({"optimizer": OptimizerConfig(lr=-1.0)}, "lr"),
    ])
    def test_invalid(self, changes, message):
        with pytest.raises(ConfigError, match=message):
            ExperimentConfig().with_changes(**changes).validate()

    def test_dict_round_trip(self):
        cfg = ExperimentConfig(
            dataset=DatasetConfig(num_classes=4, shape=(1, 8, 8)),
            targets=(1, 2),
            seeds=(5,),
            arch="dense",
        )
        data = cfg.to_dict()
        assert data["dataset"]["shape"] == [1, 8, 8]
        assert data["targets"] == [1, 2]
        assert ExperimentConfig.from_dict(data) == cfg


@pytest.mark.unit
class TestSvgUnit:

    def test_fmt_num(self):
        assert fmt_num(3.0) == "3"
        assert fmt_num(2.5) == "2.5"
        assert fmt_num(1.23456) == "1.235"

    def test_clip_line(self):
        points = _clip_line([1.0, 0.0], -0.5, -1.0, 1.0)
        assert sorted(points) == [(0.5, -1.0), (0.5, 1.0)]
        assert _clip_line([1.0, 0.0], -5.0, -1.0, 1.0) == []

    def test_plot_document(self):
        plot = Plot(-1.0, 1.0, size=100, margin=10, title="a < b")
        assert plot.px((-1.0, -1.0)) == (10.0, 90.0)
        assert plot.px((1.0, 1.0)) == (90.0, 10.0)
        plot.vector((0.0, 0.0), (0.5, 0.0), "#ff0000", "v")
        plot.line_through((0.0, 1.0), 0.0, "#888888")
        text = plot.render()
        assert text.startswith('<?xml version="1.0" encoding="UTF-8"?>\n<svg')
        assert 'marker-end="url(#arrow0)"' in text
        assert "a &lt; b" in text
        assert text.rstrip().endswith("</svg>")


@pytest.mark.unit
class TestToyClassifierUnit:

    def test_least_squares_matches_population_solution(self):
        """At 45 degrees the A-margin is 0.1593 (x1 + 0.5) - 0.8673 x2."""
        ds = generate_toy(ToyConfig.from_degrees(45.0, n=10000, rng_seed=3))
        normal, offset = fit_toy_classifier(ds)
        assert normal == pytest.approx([0.1593, -0.8673], abs=0.05)
        assert offset == pytest.approx(0.0797, abs=0.05)

    def test_picked_sample_noise_near_two_sigma(self):
        cfg = ToyConfig.from_degrees(45.0, n=10000, rng_seed=4)
        ds = generate_toy(cfg)
        index = pick_probe(ds, cfg)
        assert ds.y_c[index] == -1 and ds.y_s[index] == 1
        residual = ds.samples[index] - SIGNAL_PATTERN + CLASS_PATTERN
        eps = float(residual @ noise_pattern(cfg.tau))
        assert eps == pytest.approx(2.0 * np.sqrt(cfg.sigma2), abs=0.05)
