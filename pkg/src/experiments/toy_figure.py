"""
Two-dimensional toy experiment: filter versus pattern concept vectors.

For each distractor angle a least-squares linear classifier is fitted on the
raw data, both concept vectors are fitted on class A, and one artifact sample
of class A is corrected with the projective map along each vector. The figure shows
the data, the decision boundary, both vectors and the two correction paths.
"""
import os
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.clarc.maps import pclarc_map
from src.concepts.concept_vector import ConceptVector
from src.concepts.fitting import fit_filter_cav, fit_pattern_cav
from src.concepts.svm import SvmConfig
from src.config.defaults import TOY_DEFAULTS
from src.datasets.dataset import LabeledDataset
from src.experiments.errors import ExperimentError
from src.experiments.svg import Plot
from src.numerics.rng import Rng
from src.numerics.serialization import dumps_json
from src.numerics.stats import axis_angle_deg
from src.toygen.toy import CLASS_PATTERN, SIGNAL_PATTERN, ToyConfig, generate_toy, noise_pattern

logger = logging.getLogger(__name__)

CLASS_NAMES = ("A", "B")
PROBE_NOISE_SIGMAS = TOY_DEFAULTS["probe_noise_sigmas"]
COLORS = {
    "A": "#1f77b4",
    "artifact": "#ff7f0e",
    "B": "#2ca02c",
    "boundary": "#7f7f7f",
    "filter": "#d62728",
    "pattern": "#9467bd",
}


@dataclass
class ToyResult:
    """Fitted vectors, boundary and corrected probe for one distractor angle."""
    tau_deg: float
    sigma2: float
    n: int
    rng_seed: int
    v_filter: List[float]
    v_pattern: List[float]
    angle_filter_deg: float
    angle_pattern_deg: float
    boundary_normal: List[float]    # decision value for class A: normal . x + offset
    boundary_offset: float
    probe: List[float]
    probe_class: str
    corrected: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tau_deg": self.tau_deg,
            "sigma2": self.sigma2,
            "n": self.n,
            "rng_seed": self.rng_seed,
            "v_filter": self.v_filter,
            "v_pattern": self.v_pattern,
            "angle_filter_deg": self.angle_filter_deg,
            "angle_pattern_deg": self.angle_pattern_deg,
            "boundary_normal": self.boundary_normal,
            "boundary_offset": self.boundary_offset,
            "probe": self.probe,
            "probe_class": self.probe_class,
            "corrected": self.corrected,
        }


@dataclass
class ToyReport:
    results: List[ToyResult] = field(default_factory=list)

    def by_tau(self, tau_deg: float) -> ToyResult:
        for result in self.results:
            if abs(result.tau_deg - tau_deg) < 1e-9:
                return result
        raise ExperimentError(f"No toy result for tau={tau_deg}")

    def to_dict(self) -> Dict[str, Any]:
        return {"results": [r.to_dict() for r in self.results]}


def fit_toy_classifier(ds: LabeledDataset) -> Tuple[np.ndarray, float]:
    """
    Least-squares linear classifier on the raw 2-D samples.

    Regresses +1 for class A and -1 for class B on [x, 1]; returns
    (normal, offset) with normal . x + offset >= 0 meaning class A.
    """
    X = np.asarray(ds.samples, dtype=np.float64)
    target = -np.asarray(ds.y_c, dtype=np.float64)
    design = np.hstack([X, np.ones((X.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return coef[:-1], float(coef[-1])


def _classify(normal: np.ndarray, offset: float, x: np.ndarray) -> Tuple[str, float]:
    margin = float(normal @ x + offset)
    return (CLASS_NAMES[0] if margin >= 0 else CLASS_NAMES[1]), margin


def _correct(normal: np.ndarray, offset: float, probe: np.ndarray, concept: ConceptVector) -> Dict[str, Any]:
    corrected = pclarc_map(probe, concept.v, concept.z_minus)
    label, margin = _classify(normal, offset, corrected)
    return {"point": corrected.tolist(), "class": label, "margin_A": margin}


def pick_probe(ds: LabeledDataset, cfg: ToyConfig) -> int:
    """
    Index of the class-A artifact sample whose distractor noise lies closest
    to PROBE_NOISE_SIGMAS standard deviations.
    """
    y_c, y_s = np.asarray(ds.y_c), np.asarray(ds.y_s)
    candidates = np.flatnonzero((y_c == -1) & (y_s == 1))
    if candidates.size == 0:
        raise ExperimentError("Toy data has no class-A artifact sample")
    clean = ds.samples[candidates] - np.outer(y_s[candidates], SIGNAL_PATTERN) - np.outer(y_c[candidates], CLASS_PATTERN)
    eps = clean @ noise_pattern(cfg.tau)
    goal = PROBE_NOISE_SIGMAS * np.sqrt(cfg.sigma2)
    return int(candidates[np.argmin(np.abs(eps - goal))])


def toy_result(cfg: ToyConfig) -> ToyResult:
    """Fit, correct and classify for one toy configuration."""
    ds = generate_toy(cfg)
    base = Rng(cfg.rng_seed)
    normal, offset = fit_toy_classifier(ds)

    class_a = ds.select_class(-1)
    X, y_s = class_a.samples, np.asarray(class_a.y_s, dtype=np.float64)
    v_filter = fit_filter_cav(X, y_s, SvmConfig(rng_seed=base.spawn("svm").seed))
    v_pattern = fit_pattern_cav(X, y_s)

    probe = np.array(ds.samples[pick_probe(ds, cfg)])
    probe_class, _ = _classify(normal, offset, probe)
    result = ToyResult(
        tau_deg=cfg.tau_deg,
        sigma2=cfg.sigma2,
        n=cfg.n,
        rng_seed=cfg.rng_seed,
        v_filter=v_filter.v.tolist(),
        v_pattern=v_pattern.v.tolist(),
        angle_filter_deg=axis_angle_deg(v_filter.v),
        angle_pattern_deg=axis_angle_deg(v_pattern.v),
        boundary_normal=normal.tolist(),
        boundary_offset=offset,
        probe=probe.tolist(),
        probe_class=probe_class,
        corrected={
            "filter": _correct(normal, offset, probe, v_filter),
            "pattern": _correct(normal, offset, probe, v_pattern),
        },
    )
    logger.info(
        f"tau={cfg.tau_deg:g}: angle(filter)={result.angle_filter_deg:.2f}, "
        f"angle(pattern)={result.angle_pattern_deg:.2f}, "
        f"corrected classes filter={result.corrected['filter']['class']}, "
        f"pattern={result.corrected['pattern']['class']}"
    )
    return result


def render_toy_svg(cfg: ToyConfig, result: ToyResult) -> str:
    """Scatter of both classes, boundary, both vectors and the correction paths."""
    ds = generate_toy(cfg)
    samples = ds.samples
    lo = float(np.floor(min(samples.min(), -2.5)))
    hi = float(np.ceil(max(samples.max(), 2.5)))
    plot = Plot(lo, hi, title=f"tau = {cfg.tau_deg:g} deg, sigma2 = {cfg.sigma2:g}")
    y_c, y_s = np.asarray(ds.y_c), np.asarray(ds.y_s)
    plot.scatter(samples[(y_c == -1) & (y_s == -1)], COLORS["A"])
    plot.scatter(samples[(y_c == -1) & (y_s == 1)], COLORS["artifact"])
    plot.scatter(samples[y_c == 1], COLORS["B"])
    plot.line_through(result.boundary_normal, result.boundary_offset, COLORS["boundary"])
    origin = (0.0, 0.0)
    plot.vector(origin, result.v_filter, COLORS["filter"], "SVM")
    plot.vector(origin, result.v_pattern, COLORS["pattern"], "PCAV")
    plot.cross(result.probe, "black")
    for kind in ("filter", "pattern"):
        point = result.corrected[kind]["point"]
        plot.trajectory([result.probe, point], COLORS[kind])
        plot.cross(point, COLORS[kind])
    plot.legend([
        ("class A", COLORS["A"]),
        ("class A with artifact", COLORS["artifact"]),
        ("class B", COLORS["B"]),
        ("filter (SVM)", COLORS["filter"]),
        ("pattern (PCAV)", COLORS["pattern"]),
    ])
    return plot.render()


def toy_basename(tau_deg: float) -> str:
    return f"toy_{tau_deg:g}"


def run_toy_figure(configs: Sequence[ToyConfig], output_dir: Optional[str] = None) -> ToyReport:
    """
    Run the toy experiment for every config. With an output_dir, each config
    also writes toy_<tau>.svg and toy_<tau>.json there.
    """
    if not configs:
        raise ExperimentError("Toy sweep is empty")
    report = ToyReport()
    for cfg in configs:
        result = toy_result(cfg)
        report.results.append(result)
        if output_dir is not None:
            os.makedirs(output_dir, exist_ok=True)
            stem = os.path.join(output_dir, toy_basename(cfg.tau_deg))
            with open(stem + ".svg", "w") as f:
                f.write(render_toy_svg(cfg, result))
            with open(stem + ".json", "w") as f:
                f.write(dumps_json(result.to_dict()))
            logger.info(f"Wrote {stem}.svg and {stem}.json")
    return report
