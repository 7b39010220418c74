"""
Controlled poisoning suite.

For every target class t and seed, a model is trained on data poisoned at
class t, concept vectors for the artifact are fitted on class-t features at
each hook point, and the corrected models are scored on a clean and a
poisoned test split.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.clarc.maps import ClarcHook
from src.concepts.concept_vector import ConceptVector, HookPoint
from src.concepts.fitting import fit_filter_cav_with_svm, fit_pattern_cav, predict_artifact_labels
from src.concepts.probing import probe_logit_shift
from src.datasets.artifacts import box_spec, color_spec, shift_spec, shift_template_from
from src.datasets.dataset import ArtifactSpec, LabeledDataset
from src.datasets.generate import gen_train_test
from src.datasets.poison import poison_backdoor, poison_clever_hans, poison_test
from src.experiments.config import CAV_CORRECTIONS, ExperimentConfig
from src.experiments.errors import ExperimentError
from src.experiments.report import CellResult, ExperimentReport
from src.models.network import NetworkModel, build_conv_model, build_dense_model
from src.models.training import evaluate, extract_features, finetune_subsequent, train
from src.numerics.rng import Rng
from src.numerics.stats import cosine_similarity

logger = logging.getLogger(__name__)

CellOutput = Tuple[List[CellResult], Dict[str, Any]]


def build_artifact(cfg: ExperimentConfig, train_ds: LabeledDataset, rng: Rng) -> ArtifactSpec:
    if cfg.artifact == "box":
        return box_spec(cfg.box_size, cfg.box_value)
    if cfg.artifact == "color":
        return color_spec(cfg.color_index)
    template = shift_template_from(train_ds, cfg.shift_source_class, rng)
    return shift_spec(template, cfg.shift_factor)


def build_model(cfg: ExperimentConfig, rng_seed: int) -> NetworkModel:
    shape = tuple(cfg.dataset.shape)
    if cfg.arch == "conv":
        return build_conv_model(shape, cfg.dataset.num_classes, rng_seed=rng_seed)
    return build_dense_model(int(np.prod(shape)), cfg.dataset.num_classes, rng_seed=rng_seed)


def fit_concepts(
    cfg: ExperimentConfig,
    model: NetworkModel,
    target_ds: LabeledDataset,
    point: HookPoint,
    rng: Rng,
) -> Tuple[Dict[str, ConceptVector], Dict[str, Any]]:
    """Concept vectors of every configured kind at one hook point, plus fit details."""
    X = extract_features(model, target_ds, point)
    y_s = np.asarray(target_ds.y_s, dtype=np.float64)
    concepts: Dict[str, ConceptVector] = {}
    details: Dict[str, Any] = {"hook": str(point), "dim": int(X.shape[1])}
    svm = None
    if "filter" in cfg.cav_kinds:
        svm_cfg = replace(cfg.svm, rng_seed=rng.spawn("svm").seed)
        concepts["filter"], svm = fit_filter_cav_with_svm(X, y_s, svm_cfg, hook=point)
        details["svm_objective"] = svm.diagnostics.objective
        details["svm_training_error"] = svm.diagnostics.training_error
        details["svm_converged"] = svm.diagnostics.converged
    if "pattern_gt" in cfg.cav_kinds:
        concepts["pattern_gt"] = fit_pattern_cav(X, y_s, hook=point)
    if "pattern_pred" in cfg.cav_kinds:
        y_hat = predict_artifact_labels(svm, X)
        details["predicted_artifact_agreement"] = float(np.mean(y_hat == y_s))
        concepts["pattern_pred"] = fit_pattern_cav(X, y_hat, hook=point, label_source="predicted")
    if "filter" in concepts and "pattern_gt" in concepts:
        details["filter_pattern_cosine"] = cosine_similarity(concepts["filter"].v, concepts["pattern_gt"].v)
    return concepts, details


def run_cell(cfg: ExperimentConfig, target: int, seed: int) -> CellOutput:
    """Train, correct and evaluate one (target, seed) cell."""
    base = Rng(seed).spawn("cell", target)
    train_ds, test_ds = gen_train_test(
        cfg.dataset.num_classes,
        tuple(cfg.dataset.shape),
        cfg.dataset.n_train_per_class,
        cfg.dataset.n_test_per_class,
        cfg.dataset.noise_sigma,
        dataset_seed=cfg.dataset.dataset_seed,
        template_peak=cfg.dataset.template_peak,
    )
    spec = build_artifact(cfg, train_ds, base.spawn("template"))
    if cfg.attack == "clever_hans":
        poisoned_train = poison_clever_hans(train_ds, target, cfg.r_ch, spec, base.spawn("poison"))
    else:
        poisoned_train = poison_backdoor(train_ds, target, cfg.r_bd, spec, base.spawn("poison"))
    poisoned_test = poison_test(test_ds, cfg.r_p, spec, base.spawn("poison_test"))
    tests = (test_ds, poisoned_test)

    opt = cfg.optimizer.with_changes(rng_seed=base.spawn("train").seed)
    model = build_model(cfg, base.spawn("init").seed)
    history = train(model, poisoned_train, opt)

    def scored(correction: str, m: NetworkModel, clarc: Optional[ClarcHook] = None, **fields) -> CellResult:
        clean, poisoned = (evaluate(m, ds, clarc) for ds in tests)
        return CellResult(target=target, seed=seed, correction=correction,
                          clean_accuracy=clean, poisoned_accuracy=poisoned, **fields)

    results: List[CellResult] = []
    if "original" in cfg.corrections:
        results.append(scored("original", model))
    if "baseline" in cfg.corrections:
        tuned = model.copy()
        train(tuned, poisoned_train, opt.with_changes(epochs=cfg.finetune_epochs, rng_seed=base.spawn("baseline").seed))
        results.append(scored("baseline", tuned))

    details: Dict[str, Any] = {
        "target": target,
        "seed": seed,
        "train_loss": history.train_loss,
        "hooks": [],
        "logit_probes": [],
    }
    wants_cavs = any(c in CAV_CORRECTIONS for c in cfg.corrections)
    non_target = test_ds.subset(np.asarray(test_ds.y_c) != target)
    target_ds = poisoned_train.select_class(target)
    for point in (cfg.hooks() if wants_cavs else ()):
        concepts, fit_details = fit_concepts(cfg, model, target_ds, point, base.spawn("concepts", point.layer))
        details["hooks"].append(fit_details)
        for kind, concept in concepts.items():
            probe = probe_logit_shift(
                model, non_target, concept, target,
                scale=None if cfg.probe_scale < 0 else cfg.probe_scale,
            )
            details["logit_probes"].append({"cav_kind": kind, **probe.to_dict()})
            if "aclarc" in cfg.corrections:
                tuned = model.copy()
                tuning = finetune_subsequent(
                    tuned,
                    poisoned_train,
                    ClarcHook.at_concept("augmentive", concept),
                    opt.with_changes(rng_seed=base.spawn("aclarc", point.layer, kind).seed),
                    subset_fraction=cfg.subset_fraction,
                    epochs=cfg.finetune_epochs,
                    evals=[("poisoned", poisoned_test)],
                )
                results.append(scored(
                    "aclarc", tuned, cav_kind=kind, hook=str(point),
                    epoch_poisoned_accuracy=tuning.eval_accuracy["poisoned"],
                ))
            if "pclarc" in cfg.corrections:
                results.append(scored(
                    "pclarc", model, ClarcHook.at_concept("projective", concept),
                    cav_kind=kind, hook=str(point),
                ))
    logger.info(f"Cell (target={target}, seed={seed}) done: {len(results)} results")
    return results, details


def _run_cell_job(args: Tuple[ExperimentConfig, int, int]) -> CellOutput:
    return run_cell(*args)


def run_controlled_suite(cfg: ExperimentConfig) -> ExperimentReport:
    """Run every (target, seed) cell and assemble the report in coordinate order."""
    cfg.validate()
    coordinates = [(t, s) for t in cfg.targets for s in cfg.seeds]
    logger.info(
        f"Suite: attack={cfg.attack}, artifact={cfg.artifact}, "
        f"{len(coordinates)} cells, jobs={cfg.jobs}"
    )
    outputs: List[CellOutput] = []
    if cfg.jobs == 1:
        for target, seed in coordinates:
            try:
                outputs.append(run_cell(cfg, target, seed))
            except Exception as e:
                raise ExperimentError(f"Cell (target={target}, seed={seed}) failed: {e}", target, seed) from e
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_run_cell_job, (cfg, t, s)) for t, s in coordinates]
            for (target, seed), future in zip(coordinates, futures):
                try:
                    outputs.append(future.result())
                except Exception as e:
                    raise ExperimentError(f"Cell (target={target}, seed={seed}) failed: {e}", target, seed) from e
    report = ExperimentReport(config=cfg.to_dict())
    for cells, details in outputs:
        report.cells.extend(cells)
        report.details.append(details)
    return report
