"""
Configuration of the controlled poisoning suite.
"""
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, Tuple

from src.concepts.concept_vector import HookPoint
from src.concepts.errors import ConceptError
from src.concepts.svm import SvmConfig
from src.config.defaults import (
    ARTIFACT_DEFAULTS,
    DATASET_DEFAULTS,
    FINETUNE_DEFAULTS,
    SUITE_DATASET_DEFAULTS,
    SUITE_DEFAULTS,
)
from src.config.errors import ConfigError
from src.models.errors import ModelError
from src.models.optimizers import OptimizerConfig

logger = logging.getLogger(__name__)

ATTACKS = ("clever_hans", "backdoor")
ARTIFACTS = ("box", "shift", "color")
CAV_KINDS = ("filter", "pattern_gt", "pattern_pred")
CORRECTIONS = ("original", "baseline", "aclarc", "pclarc")
ARCHITECTURES = ("conv", "dense")

# Corrections that use a concept vector at a hook point
CAV_CORRECTIONS = ("aclarc", "pclarc")


@dataclass(frozen=True)
class DatasetConfig:
    num_classes: int = DATASET_DEFAULTS["num_classes"]
    shape: Tuple[int, int, int] = DATASET_DEFAULTS["shape"]
    n_train_per_class: int = DATASET_DEFAULTS["n_train_per_class"]
    n_test_per_class: int = DATASET_DEFAULTS["n_test_per_class"]
    noise_sigma: float = DATASET_DEFAULTS["noise_sigma"]
    template_peak: float = DATASET_DEFAULTS["template_peak"]
    dataset_seed: int = DATASET_DEFAULTS["dataset_seed"]

    @classmethod
    def for_run(cls, attack: str, artifact: str, **kwargs) -> "DatasetConfig":
        """
        Suite dataset for an attack and artifact. Colour tints get RGB images,
        other artifacts single-channel ones; SUITE_DATASET_DEFAULTS fills the
        attack's overrides. Explicit kwargs (None meaning unset) win.
        """
        kwargs = {key: value for key, value in kwargs.items() if value is not None}
        kwargs.setdefault("shape", DATASET_DEFAULTS["color_shape" if artifact == "color" else "shape"])
        for key, value in SUITE_DATASET_DEFAULTS.get(attack, {}).items():
            kwargs.setdefault(key, value)
        return cls(**kwargs)


@dataclass(frozen=True)
class ExperimentConfig:
    """One controlled suite: every (target, seed) cell is trained and evaluated."""
    dataset: DatasetConfig = field(
        default_factory=lambda: DatasetConfig.for_run(SUITE_DEFAULTS["attack"], SUITE_DEFAULTS["artifact"])
    )
    attack: str = SUITE_DEFAULTS["attack"]
    artifact: str = SUITE_DEFAULTS["artifact"]
    r_ch: float = SUITE_DEFAULTS["r_ch"]
    r_bd: float = SUITE_DEFAULTS["r_bd"]
    r_p: float = SUITE_DEFAULTS["r_p"]
    targets: Tuple[int, ...] = SUITE_DEFAULTS["targets"]
    seeds: Tuple[int, ...] = SUITE_DEFAULTS["seeds"]
    cav_kinds: Tuple[str, ...] = SUITE_DEFAULTS["cav_kinds"]
    corrections: Tuple[str, ...] = SUITE_DEFAULTS["corrections"]
    hook_points: Tuple[str, ...] = SUITE_DEFAULTS["hook_points"]
    box_size: int = ARTIFACT_DEFAULTS["box_size"]
    box_value: float = ARTIFACT_DEFAULTS["box_value"]
    shift_factor: float = ARTIFACT_DEFAULTS["shift_factor"]
    shift_source_class: int = ARTIFACT_DEFAULTS["shift_source_class"]
    color_index: int = ARTIFACT_DEFAULTS["color_index"]
    arch: str = "conv"
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    finetune_epochs: int = FINETUNE_DEFAULTS["epochs"]
    subset_fraction: float = FINETUNE_DEFAULTS["subset_fraction"]
    svm: SvmConfig = field(default_factory=SvmConfig)
    probe_scale: float = -1.0    # Negative means |z_plus - z_minus|
    jobs: int = SUITE_DEFAULTS["jobs"]

    @classmethod
    def for_run(cls, attack: str, artifact: str, **changes) -> "ExperimentConfig":
        """Config for an attack and artifact on that pairing's suite dataset."""
        return cls(dataset=DatasetConfig.for_run(attack, artifact), attack=attack, artifact=artifact, **changes)

    def with_changes(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    @property
    def poison_rate(self) -> float:
        return self.r_ch if self.attack == "clever_hans" else self.r_bd

    def hooks(self) -> Tuple[HookPoint, ...]:
        return tuple(HookPoint.parse(name) for name in self.hook_points)

    def validate(self) -> None:
        if self.attack not in ATTACKS:
            raise ConfigError(f"Unknown attack: {self.attack}. Must be one of {list(ATTACKS)}")
        if self.artifact not in ARTIFACTS:
            raise ConfigError(f"Unknown artifact: {self.artifact}. Must be one of {list(ARTIFACTS)}")
        if self.arch not in ARCHITECTURES:
            raise ConfigError(f"Unknown architecture: {self.arch}. Must be one of {list(ARCHITECTURES)}")
        for name in ("r_ch", "r_bd", "r_p"):
            rate = getattr(self, name)
            if not 0 < rate <= 1:
                raise ConfigError(f"{name} must lie in (0, 1], got {rate}")
        if not self.seeds:
            raise ConfigError("At least one seed is required")
        if not self.targets:
            raise ConfigError("At least one target class is required")
        k = self.dataset.num_classes
        for t in self.targets:
            if not 0 <= t < k:
                raise ConfigError(f"Target class {t} outside [0, {k})")
        if len(set(self.targets)) != len(self.targets) or len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("Targets and seeds must not repeat")
        for kind in self.cav_kinds:
            if kind not in CAV_KINDS:
                raise ConfigError(f"Unknown CAV kind: {kind}. Must be one of {list(CAV_KINDS)}")
        for correction in self.corrections:
            if correction not in CORRECTIONS:
                raise ConfigError(f"Unknown correction: {correction}. Must be one of {list(CORRECTIONS)}")
        if "pattern_pred" in self.cav_kinds and "filter" not in self.cav_kinds:
            raise ConfigError("pattern_pred needs the filter CAV's SVM as artifact detector")
        try:
            self.hooks()
        except ConceptError as e:
            raise ConfigError(str(e)) from e
        if self.artifact == "color" and self.dataset.shape[0] != 3:
            raise ConfigError(f"color artifacts need 3-channel images, got shape {self.dataset.shape}")
        if self.artifact == "shift" and not 0 <= self.shift_source_class < k:
            raise ConfigError(f"Shift source class {self.shift_source_class} outside [0, {k})")
        if not 0 <= self.subset_fraction <= 1:
            raise ConfigError(f"subset_fraction must lie in [0, 1], got {self.subset_fraction}")
        if self.finetune_epochs < 1:
            raise ConfigError(f"finetune_epochs must be at least 1, got {self.finetune_epochs}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")
        try:
            self.optimizer.validate()
            self.svm.validate()
        except (ModelError, ConceptError) as e:
            raise ConfigError(str(e)) from e

    def to_dict(self) -> Dict[str, Any]:
        """Plain-data view, recorded in every report."""
        data = asdict(self)
        for key, value in list(data.items()):
            if isinstance(value, tuple):
                data[key] = list(value)
        data["dataset"]["shape"] = list(self.dataset.shape)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        data = dict(data)
        dataset = dict(data.pop("dataset", {}))
        if "shape" in dataset:
            dataset["shape"] = tuple(dataset["shape"])
        optimizer = data.pop("optimizer", {})
        svm = data.pop("svm", {})
        for key in ("targets", "seeds", "cav_kinds", "corrections", "hook_points"):
            if key in data:
                data[key] = tuple(data[key])
        try:
            return cls(
                dataset=DatasetConfig(**dataset),
                optimizer=OptimizerConfig(**optimizer),
                svm=SvmConfig(**svm),
                **data,
            )
        except TypeError as e:
            raise ConfigError(f"Invalid experiment config: {e}") from e
