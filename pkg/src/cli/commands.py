"""
Subcommand handlers. Each takes the parsed arguments, writes its outputs
under args.output and returns the process exit code.
"""
import os
import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.clarc.maps import ClarcHook
from src.concepts.concept_vector import ConceptVector, HookPoint, load_concept, save_concept
from src.concepts.fitting import fit_filter_cav_with_svm, fit_pattern_cav, predict_artifact_labels
from src.concepts.probing import cosine_scores, nearest_neighbors, probe_logit_shift
from src.concepts.svm import SvmConfig
from src.config.errors import ConfigError
from src.datasets.artifacts import box_spec, color_spec, shift_spec, shift_template_from
from src.datasets.dataset import ArtifactSpec, LabeledDataset
from src.datasets.generate import gen_train_test
from src.datasets.io import export_csv, load_dataset, save_dataset
from src.datasets.poison import poison_backdoor, poison_clever_hans, poison_test
from src.experiments.config import DatasetConfig, ExperimentConfig
from src.experiments.controlled import run_controlled_suite
from src.experiments.report import render_report
from src.experiments.toy_figure import run_toy_figure, toy_basename
from src.models.checkpoint import load_model, save_model
from src.models.gradcheck import gradient_check, kink_free_input
from src.models.network import NetworkModel, build_conv_model, build_dense_model
from src.models.optimizers import OptimizerConfig
from src.models.training import evaluate, extract_features, finetune_subsequent, train
from src.numerics.rng import Rng
from src.numerics.serialization import dumps_json, loads_json
from src.toygen.toy import ToyConfig

logger = logging.getLogger(__name__)

MODEL_FILE = "model.bin"
CAV_FILE = "cav.json"
CORRECTION_FILE = "correction.json"

# Default poison rate per attack
ATTACK_RATES = {"clever-hans": 0.1, "backdoor": 0.01, "test": 1.0}


def _require(args, *names: str) -> None:
    missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name, None) is None]
    if missing:
        raise ConfigError(f"Missing required option(s): {', '.join(missing)}")


def _out(args, name: str) -> str:
    os.makedirs(args.output, exist_ok=True)
    return os.path.join(args.output, name)


def _write_json(args, name: str, data: Any) -> str:
    path = _out(args, name)
    with open(path, "w") as f:
        f.write(dumps_json(data))
    return path


def _optimizer(args, seed: int, epochs: Optional[int] = None) -> OptimizerConfig:
    opt = OptimizerConfig(
        kind=args.optimizer,
        lr=args.lr,
        per_epoch_lr_factor=args.lr_factor,
        epochs=epochs if epochs is not None else args.epochs,
        batch_size=args.batch_size,
        rng_seed=seed,
    )
    opt.validate()
    return opt


def _artifact(args, template_source: LabeledDataset, rng: Rng) -> ArtifactSpec:
    if args.artifact == "box":
        return box_spec(args.box_size, args.box_value)
    if args.artifact == "color":
        return color_spec(args.color_index)
    template = shift_template_from(template_source, args.shift_source, rng)
    return shift_spec(template, args.shift_factor)


def _features(model: Optional[NetworkModel], ds: LabeledDataset, point: HookPoint) -> np.ndarray:
    if model is None:
        if not point.is_input:
            raise ConfigError(f"--model is required for features at {point}")
        return np.asarray(ds.samples)
    return extract_features(model, ds, point)


def _load_correction(path: str) -> ClarcHook:
    with open(path) as f:
        data = loads_json(f.read())
    concept = ConceptVector.from_dict(data["concept"])
    return ClarcHook(mode=data["mode"], concept=concept, point=concept.hook)


def cmd_toy(args) -> int:
    configs = [
        ToyConfig.from_degrees(
            tau,
            sigma2=args.sigma2,
            n=args.n,
            artifact_fraction_in_A=args.fraction,
            rng_seed=args.seed,
        )
        for tau in args.tau
    ]
    report = run_toy_figure(configs, args.output)
    for result in report.results:
        print(
            f"tau={result.tau_deg:g}: angle(svm)={result.angle_filter_deg:.3f} "
            f"angle(pcav)={result.angle_pattern_deg:.3f} "
            f"corrected svm->{result.corrected['filter']['class']} "
            f"pcav->{result.corrected['pattern']['class']} "
            f"({toy_basename(result.tau_deg)}.svg)"
        )
    return 0


def cmd_gen(args) -> int:
    train_ds, test_ds = gen_train_test(
        args.classes,
        tuple(args.shape),
        args.n_train,
        args.n_test,
        args.noise,
        dataset_seed=args.seed,
        template_peak=args.template_peak,
    )
    for name, ds in (("train", train_ds), ("test", test_ds)):
        save_dataset(ds, _out(args, f"{name}.bin"))
        if args.csv:
            export_csv(ds, _out(args, f"{name}.csv"))
        print(f"{name}: {ds.n} samples, shape {ds.channel_shape}")
    return 0


def cmd_poison(args) -> int:
    _require(args, "input")
    ds = load_dataset(args.input)
    rng = Rng(args.seed)
    template_source = load_dataset(args.template_from) if args.template_from else ds
    spec = _artifact(args, template_source, rng.spawn("template"))
    rate = args.rate if args.rate is not None else ATTACK_RATES[args.attack]
    if args.attack == "test":
        poisoned = poison_test(ds, rate, spec, rng.spawn("poison_test"))
    else:
        _require(args, "target")
        attack = poison_clever_hans if args.attack == "clever-hans" else poison_backdoor
        poisoned = attack(ds, args.target, rate, spec, rng.spawn("poison"))
    path = _out(args, args.name)
    save_dataset(poisoned, path)
    print(f"{args.attack}: {int((np.asarray(poisoned.y_s) == 1).sum())} of {poisoned.n} samples carry the artifact -> {path}")
    return 0


def cmd_train(args) -> int:
    _require(args, "train")
    ds = load_dataset(args.train, split="train")
    base = Rng(args.seed)
    if args.arch == "conv":
        if ds.channel_shape is None:
            raise ConfigError("--arch conv needs image samples")
        model = build_conv_model(tuple(ds.channel_shape), ds.num_classes, rng_seed=base.spawn("init").seed)
    else:
        model = build_dense_model(ds.dim, ds.num_classes, hidden=tuple(args.hidden), rng_seed=base.spawn("init").seed)
    evals = [(os.path.basename(path), load_dataset(path)) for path in args.eval]
    history = train(model, ds, _optimizer(args, base.spawn("train").seed), evals)
    save_model(model, _out(args, MODEL_FILE))
    _write_json(args, "history.json", history.to_dict())
    print(f"train accuracy {history.train_accuracy[-1]:.4f} after {history.epochs} epochs")
    for name, values in history.eval_accuracy.items():
        print(f"{name}: {values[-1]:.4f}")
    return 0


def cmd_fit_cav(args) -> int:
    _require(args, "data", "target")
    ds = load_dataset(args.data)
    model = load_model(args.model) if args.model else None
    point = HookPoint.parse(args.hook)
    target_ds = ds.select_class(args.target)
    if target_ds.n == 0:
        raise ConfigError(f"Class {args.target} has no samples in {args.data}")
    X = _features(model, target_ds, point)
    y_s = np.asarray(target_ds.y_s, dtype=np.float64)
    svm_cfg = SvmConfig(
        regularization=args.svm_lambda,
        epochs=args.svm_epochs,
        rng_seed=Rng(args.seed).spawn("svm").seed,
    )
    if args.kind == "filter":
        concept, _ = fit_filter_cav_with_svm(X, y_s, svm_cfg, hook=point)
    elif args.labels == "gt":
        concept = fit_pattern_cav(X, y_s, hook=point)
    else:
        _, svm = fit_filter_cav_with_svm(X, y_s, svm_cfg, hook=point)
        concept = fit_pattern_cav(X, predict_artifact_labels(svm, X), hook=point, label_source="predicted")
    path = _out(args, args.name)
    save_concept(concept, path)
    print(f"{concept.kind} concept at {concept.hook} (dim {concept.dim}, labels {concept.label_source}) -> {path}")
    return 0


def cmd_correct(args) -> int:
    _require(args, "model", "cav")
    model = load_model(args.model)
    concept = load_concept(args.cav)
    if args.mode == "aclarc":
        _require(args, "data")
        ds = load_dataset(args.data)
        history = finetune_subsequent(
            model,
            ds,
            ClarcHook.at_concept("augmentive", concept),
            _optimizer(args, Rng(args.seed).spawn("finetune").seed, epochs=args.finetune_epochs),
            subset_fraction=args.subset,
            epochs=args.finetune_epochs,
        )
        _write_json(args, "history.json", history.to_dict())
        print(f"A-ClArC fine-tuned at {concept.hook} for {history.epochs} epochs")
    else:
        hook = ClarcHook.at_concept("projective", concept)
        model.hook_position(hook.point)
        _write_json(args, CORRECTION_FILE, {"mode": hook.mode, "concept": concept.to_dict()})
        print(f"P-ClArC projection at {concept.hook} -> {_out(args, CORRECTION_FILE)}")
    save_model(model, _out(args, MODEL_FILE))
    return 0


def cmd_eval(args) -> int:
    _require(args, "model")
    if not args.data:
        raise ConfigError("Missing required option(s): --data")
    model = load_model(args.model)
    hook = _load_correction(args.correction) if args.correction else None
    results: Dict[str, float] = {}
    for path in args.data:
        results[os.path.basename(path)] = evaluate(model, load_dataset(path), hook)
    _write_json(args, "eval.json", {"correction": args.correction, "accuracy": results})
    for name, accuracy in results.items():
        print(f"{name}: {accuracy:.4f}")
    return 0


def cmd_logits(args) -> int:
    _require(args, "model", "data", "cav", "target")
    model = load_model(args.model)
    ds = load_dataset(args.data)
    if args.exclude_target:
        ds = ds.subset(np.asarray(ds.y_c) != args.target)
    report = probe_logit_shift(model, ds, load_concept(args.cav), args.target, args.scale)
    _write_json(args, "logits.json", report.to_dict())
    print(
        f"target {args.target}: {report.target_before:.4f} -> {report.target_after:.4f}, "
        f"true class: {report.true_before:.4f} -> {report.true_after:.4f} (scale {report.scale:.4f})"
    )
    return 0


def cmd_neighbors(args) -> int:
    _require(args, "cav", "data")
    concept = load_concept(args.cav)
    ds = load_dataset(args.data)
    model = load_model(args.model) if args.model else None
    X = _features(model, ds, concept.hook)
    k = min(args.k, ds.n)
    indices = nearest_neighbors(concept, X, k)
    scores = cosine_scores(concept.v, X)
    _write_json(args, "neighbors.json", {
        "hook": str(concept.hook),
        "indices": indices,
        "scores": [float(scores[i]) for i in indices],
        "y_c": [int(ds.y_c[i]) for i in indices],
        "y_s": [int(ds.y_s[i]) for i in indices],
    })
    with_artifact = sum(int(ds.y_s[i]) == 1 for i in indices)
    print(f"{with_artifact} of the {len(indices)} nearest neighbours carry the artifact")
    return 0


def suite_config(args) -> ExperimentConfig:
    seeds = tuple(args.seed + i for i in range(args.seeds)) if args.seed_list is None else tuple(args.seed_list)
    dataset_kwargs = dict(
        num_classes=args.classes,
        n_train_per_class=args.n_train,
        n_test_per_class=args.n_test,
        noise_sigma=args.noise,
        template_peak=args.template_peak,
        dataset_seed=args.dataset_seed,
        shape=tuple(args.shape) if args.shape is not None else None,
    )
    attack = args.attack.replace("-", "_")
    return ExperimentConfig(
        dataset=DatasetConfig.for_run(attack, args.artifact, **dataset_kwargs),
        attack=attack,
        artifact=args.artifact,
        r_ch=args.r_ch,
        r_bd=args.r_bd,
        r_p=args.r_p,
        targets=tuple(args.targets),
        seeds=seeds,
        cav_kinds=tuple(args.cav_kinds),
        corrections=tuple(args.corrections),
        hook_points=tuple(args.hooks),
        box_size=args.box_size,
        box_value=args.box_value,
        shift_factor=args.shift_factor,
        shift_source_class=args.shift_source,
        color_index=args.color_index,
        arch=args.arch,
        optimizer=_optimizer(args, 0),
        finetune_epochs=args.finetune_epochs,
        subset_fraction=args.subset,
        svm=SvmConfig(regularization=args.svm_lambda, epochs=args.svm_epochs),
        probe_scale=args.scale if args.scale is not None else -1.0,
        jobs=args.jobs,
    )


def cmd_suite(args) -> int:
    report = run_controlled_suite(suite_config(args))
    for fmt, name in (("json", "report.json"), ("csv", "report.csv"), ("markdown", "report.md")):
        with open(_out(args, name), "w") as f:
            f.write(render_report(report, fmt))
    for row in report.aggregates():
        print(
            f"{row['correction']:<9} {row['cav_kind']:<13} {row['hook']:<14} "
            f"clean={row['clean_mean']:.3f} poisoned={row['poisoned_mean']:.3f}"
        )
    return 0


def gradcheck_model(arch: str, seed: int) -> Tuple[NetworkModel, int]:
    """Small networks of both architectures for the finite-difference check."""
    init_seed = Rng(seed).spawn("init").seed
    if arch == "conv":
        model = build_conv_model((1, 8, 8), 3, conv_channels=(2, 3), hidden=8, rng_seed=init_seed)
    else:
        model = build_dense_model(6, 3, hidden=(5, 4), rng_seed=init_seed)
    return model, 3


def cmd_gradcheck(args) -> int:
    model, num_classes = gradcheck_model(args.arch, args.seed)
    rng = Rng(args.seed)
    x = kink_free_input(model, rng.spawn("gradcheck"), batch=args.batch)
    y = np.arange(args.batch) % num_classes
    error = gradient_check(model, x, y, epsilon=args.epsilon)
    passed = error < args.tolerance
    _write_json(args, "gradcheck.json", {
        "arch": args.arch,
        "epsilon": args.epsilon,
        "tolerance": args.tolerance,
        "max_relative_error": error,
        "passed": passed,
    })
    print(f"max relative error {error:.3e} ({'ok' if passed else 'FAILED'}, tolerance {args.tolerance:g})")
    return 0 if passed else 2


COMMANDS: List[Tuple[str, Any, str]] = [
    ("toy", cmd_toy, "2-D toy experiment: filter vs. pattern concept vectors, SVG + JSON per tau"),
    ("gen", cmd_gen, "Generate train/test pattern datasets"),
    ("poison", cmd_poison, "Insert an artifact: clever-hans, backdoor or test poisoning"),
    ("train", cmd_train, "Train a network on a dataset"),
    ("fit-cav", cmd_fit_cav, "Fit a filter or pattern concept vector on one class"),
    ("correct", cmd_correct, "Correct a model with A-ClArC fine-tuning or a P-ClArC projection"),
    ("eval", cmd_eval, "Accuracy of a (corrected) model on datasets"),
    ("logits", cmd_logits, "Softmax shift when the concept is added to features"),
    ("neighbors", cmd_neighbors, "Samples closest to a concept by cosine similarity"),
    ("suite", cmd_suite, "Controlled poisoning suite over target classes and seeds"),
    ("gradcheck", cmd_gradcheck, "Finite-difference check of backpropagation"),
]
