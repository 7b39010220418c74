"""
pcav command-line entry point.

Exit codes: 0 success, 1 user or domain error (including usage errors),
2 internal error.
"""
import os
import sys
import logging
import argparse
from typing import Any, Dict, List, Optional, Sequence

from dotenv import load_dotenv

from src.clarc.errors import ClarcError
from src.cli.commands import COMMANDS
from src.cli.config_file import read_config_file, split_list, write_resolved_config
from src.cli.executor import CommandExecutor
from src.concepts.errors import ConceptError
from src.config.defaults import (
    ARTIFACT_DEFAULTS,
    DATASET_DEFAULTS,
    FINETUNE_DEFAULTS,
    GRADCHECK_DEFAULTS,
    OPTIMIZER_DEFAULTS,
    SUITE_DEFAULTS,
    SVM_DEFAULTS,
    TOY_DEFAULTS,
)
from src.config.errors import ConfigError
from src.datasets.errors import DatasetError
from src.experiments.errors import ExperimentError
from src.models.errors import ModelError
from src.numerics.errors import NumericsError
from src.toygen.errors import ToyDataError

logger = logging.getLogger(__name__)

USER_ERRORS = (
    ConfigError,
    NumericsError,
    ToyDataError,
    DatasetError,
    ConceptError,
    ClarcError,
    ModelError,
    ExperimentError,
    OSError,
)

# Arguments that are not part of the resolved configuration
_INTERNAL_KEYS = ("command",)


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-o", "--output", default="out", help="Output directory")
    parser.add_argument("--config", help="key = value config file; flags override its values")
    parser.add_argument("--seed", type=int, help="Seed (falls back to $PCAV_SEED, then 0)")


def _artifact_flags(parser: argparse.ArgumentParser, default: str = "box") -> None:
    parser.add_argument("--artifact", choices=["box", "shift", "color"], default=default)
    parser.add_argument("--box-size", type=int, default=ARTIFACT_DEFAULTS["box_size"])
    parser.add_argument("--box-value", type=float, default=ARTIFACT_DEFAULTS["box_value"])
    parser.add_argument("--shift-factor", type=float, default=ARTIFACT_DEFAULTS["shift_factor"])
    parser.add_argument("--shift-source", type=int, default=ARTIFACT_DEFAULTS["shift_source_class"],
                        help="Class whose random sample is the shift template")
    parser.add_argument("--color-index", type=int, default=ARTIFACT_DEFAULTS["color_index"])


def _optimizer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--optimizer", choices=["sgd", "adadelta"], default=OPTIMIZER_DEFAULTS["kind"])
    parser.add_argument("--lr", type=float, default=OPTIMIZER_DEFAULTS["lr"])
    parser.add_argument("--lr-factor", type=float, default=OPTIMIZER_DEFAULTS["per_epoch_lr_factor"],
                        help="Per-epoch learning-rate decay factor")
    parser.add_argument("--epochs", type=int, default=OPTIMIZER_DEFAULTS["epochs"])
    parser.add_argument("--batch-size", type=int, default=OPTIMIZER_DEFAULTS["batch_size"])


def _svm_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--svm-lambda", type=float, default=SVM_DEFAULTS["regularization"])
    parser.add_argument("--svm-epochs", type=int, default=SVM_DEFAULTS["epochs"])


def _dataset_flags(parser: argparse.ArgumentParser, shape_default: Optional[Sequence[int]], per_attack: bool = False) -> None:
    """With per_attack, sizes and noise left unset fall back to the attack's suite dataset."""
    def default(key):
        return None if per_attack else DATASET_DEFAULTS[key]

    parser.add_argument("--classes", type=int, default=DATASET_DEFAULTS["num_classes"])
    parser.add_argument("--shape", type=int, nargs=3, default=shape_default, metavar=("C", "H", "W"))
    parser.add_argument("--n-train", type=int, default=default("n_train_per_class"),
                        help="Training samples per class")
    parser.add_argument("--n-test", type=int, default=default("n_test_per_class"),
                        help="Test samples per class")
    parser.add_argument("--noise", type=float, default=default("noise_sigma"))
    parser.add_argument("--template-peak", type=float, default=default("template_peak"),
                        help="Brightest template pixel before noise")


def build_parser() -> CliParser:
    parser = CliParser(prog="pcav", description="Pattern concept vectors and class artifact compensation")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    descriptions = {name: description for name, _, description in COMMANDS}
    sub: Dict[str, argparse.ArgumentParser] = {}
    for name, _, _ in COMMANDS:
        sub[name] = subparsers.add_parser(name, help=descriptions[name], description=descriptions[name])
        _common(sub[name])

    p = sub["toy"]
    p.add_argument("--tau", type=float, nargs="+", default=list(TOY_DEFAULTS["taus_deg"]),
                   help="Distractor angles in degrees")
    p.add_argument("--sigma2", type=float, default=TOY_DEFAULTS["sigma2"])
    p.add_argument("--n", type=int, default=TOY_DEFAULTS["n"])
    p.add_argument("--fraction", type=float, default=TOY_DEFAULTS["artifact_fraction_in_A"],
                   help="Share of class A carrying the artifact")

    p = sub["gen"]
    _dataset_flags(p, list(DATASET_DEFAULTS["shape"]))
    p.add_argument("--csv", action="store_true", help="Also export CSV files")

    p = sub["poison"]
    p.add_argument("--attack", choices=["clever-hans", "backdoor", "test"], default="clever-hans")
    p.add_argument("--input", help="Dataset file to poison")
    p.add_argument("--target", type=int, help="Target class (clever-hans, backdoor)")
    p.add_argument("--rate", type=float, help="Poison rate (defaults: 0.1, 0.01, 1.0 per attack)")
    p.add_argument("--template-from", help="Dataset to draw the shift template from (default: --input)")
    p.add_argument("--name", default="poisoned.bin", help="Output file name")
    _artifact_flags(p)

    p = sub["train"]
    p.add_argument("--train", help="Training dataset file")
    p.add_argument("--eval", nargs="*", default=[], help="Datasets evaluated after every epoch")
    p.add_argument("--arch", choices=["conv", "dense"], default="conv")
    p.add_argument("--hidden", type=int, nargs="*", default=[64], help="Hidden widths of the dense architecture")
    _optimizer_flags(p)

    p = sub["fit-cav"]
    p.add_argument("--model", help="Model checkpoint (optional for --hook input)")
    p.add_argument("--data", help="Dataset holding the target class with artifact flags")
    p.add_argument("--target", type=int)
    p.add_argument("--kind", choices=["filter", "pattern"], default="pattern")
    p.add_argument("--labels", choices=["gt", "predicted"], default="gt",
                   help="Artifact labels for pattern CAVs: ground truth or SVM predictions")
    p.add_argument("--hook", default="input", help="input or layerK")
    p.add_argument("--name", default="cav.json", help="Output file name")
    _svm_flags(p)

    p = sub["correct"]
    p.add_argument("--model")
    p.add_argument("--cav")
    p.add_argument("--mode", choices=["aclarc", "pclarc"], default="pclarc")
    p.add_argument("--data", help="Training data for A-ClArC fine-tuning")
    p.add_argument("--finetune-epochs", type=int, default=FINETUNE_DEFAULTS["epochs"])
    p.add_argument("--subset", type=float, default=FINETUNE_DEFAULTS["subset_fraction"],
                   help="Share of each batch routed through the augmentive map")
    _optimizer_flags(p)

    p = sub["eval"]
    p.add_argument("--model")
    p.add_argument("--data", nargs="+")
    p.add_argument("--correction", help="correction.json written by 'correct --mode pclarc'")

    p = sub["logits"]
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--cav")
    p.add_argument("--target", type=int)
    p.add_argument("--scale", type=float, help="Addition scale (default |z_plus - z_minus|)")
    p.add_argument("--exclude-target", action="store_true", help="Probe only samples of other classes")

    p = sub["neighbors"]
    p.add_argument("--cav")
    p.add_argument("--data")
    p.add_argument("--model", help="Model checkpoint (needed unless the concept sits at the input)")
    p.add_argument("--k", type=int, default=10)

    p = sub["suite"]
    p.add_argument("--attack", choices=["clever-hans", "backdoor"], default=SUITE_DEFAULTS["attack"].replace("_", "-"))
    _artifact_flags(p, default=SUITE_DEFAULTS["artifact"])
    p.add_argument("--r-ch", type=float, default=SUITE_DEFAULTS["r_ch"])
    p.add_argument("--r-bd", type=float, default=SUITE_DEFAULTS["r_bd"])
    p.add_argument("--r-p", type=float, default=SUITE_DEFAULTS["r_p"])
    p.add_argument("--targets", type=int, nargs="+", default=list(SUITE_DEFAULTS["targets"]))
    p.add_argument("--seeds", type=int, default=len(SUITE_DEFAULTS["seeds"]),
                   help="Number of seeds, counting up from --seed")
    p.add_argument("--seed-list", type=int, nargs="+", help="Explicit seeds (overrides --seeds)")
    p.add_argument("--cav-kinds", nargs="+", default=list(SUITE_DEFAULTS["cav_kinds"]),
                   choices=["filter", "pattern_gt", "pattern_pred"])
    p.add_argument("--corrections", nargs="+", default=list(SUITE_DEFAULTS["corrections"]),
                   choices=["original", "baseline", "aclarc", "pclarc"])
    p.add_argument("--hooks", nargs="+", default=list(SUITE_DEFAULTS["hook_points"]))
    _dataset_flags(p, None, per_attack=True)
    p.add_argument("--dataset-seed", type=int, default=DATASET_DEFAULTS["dataset_seed"])
    p.add_argument("--arch", choices=["conv", "dense"], default="conv")
    _optimizer_flags(p)
    p.add_argument("--finetune-epochs", type=int, default=FINETUNE_DEFAULTS["epochs"])
    p.add_argument("--subset", type=float, default=FINETUNE_DEFAULTS["subset_fraction"])
    _svm_flags(p)
    p.add_argument("--scale", type=float, help="Logit-probe scale (default |z_plus - z_minus|)")
    p.add_argument("--jobs", type=int, default=SUITE_DEFAULTS["jobs"], help="Parallel cells")

    p = sub["gradcheck"]
    p.add_argument("--arch", choices=["conv", "dense"], default="conv")
    p.add_argument("--epsilon", type=float, default=GRADCHECK_DEFAULTS["epsilon"])
    p.add_argument("--tolerance", type=float, default=GRADCHECK_DEFAULTS["tolerance"])
    p.add_argument("--batch", type=int, default=2)

    parser.subparsers_by_name = sub
    return parser


def _convert(action: argparse.Action, key: str, value: str) -> Any:
    convert = action.type or str
    try:
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            flag = value.lower() in ("1", "true", "yes", "on")
            return flag if isinstance(action, argparse._StoreTrueAction) else not flag
        if action.nargs in ("+", "*") or isinstance(action.nargs, int):
            result = [convert(item) for item in split_list(value)]
            if isinstance(action.nargs, int) and len(result) != action.nargs:
                raise ConfigError(f"Config key {key!r} needs {action.nargs} values, got {len(result)}")
        else:
            result = convert(value)
    except ValueError as e:
        raise ConfigError(f"Config key {key!r}: invalid value {value!r}") from e
    items = result if isinstance(result, list) else [result]
    if action.choices is not None and any(item not in action.choices for item in items):
        raise ConfigError(f"Config key {key!r}: {value!r} is not one of {list(action.choices)}")
    return result


def config_defaults(parser: argparse.ArgumentParser, values: Dict[str, str]) -> Dict[str, Any]:
    """Typed defaults for a subcommand parser from config-file keys."""
    actions = {action.dest: action for action in parser._actions}
    defaults = {}
    for key, value in values.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest in ("config", "help") or dest not in actions:
            raise ConfigError(f"Unknown config key {key!r} for '{parser.prog}'")
        defaults[dest] = _convert(actions[dest], key, value)
    return defaults


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse argv; values from --config become defaults that explicit flags override."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = parser.subparsers_by_name[args.command]
        sub.set_defaults(**config_defaults(sub, read_config_file(args.config)))
        args = parser.parse_args(argv)
    if args.seed is None:
        env_seed = os.getenv("PCAV_SEED")
        try:
            args.seed = int(env_seed) if env_seed else 0
        except ValueError as e:
            raise ConfigError(f"PCAV_SEED must be an integer, got {env_seed!r}") from e
    return args


def build_executor() -> CommandExecutor:
    executor = CommandExecutor()
    for name, handler, description in COMMANDS:
        executor.register_command(name, handler, description)
    return executor


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    except ConfigError as e:
        print(f"pcav: error: {e}", file=sys.stderr)
        return 1

    resolved = {k: v for k, v in vars(args).items() if k not in _INTERNAL_KEYS}
    try:
        write_resolved_config(resolved, args.output)
        return build_executor().execute_command(
            args.command,
            args,
            args.output,
            metadata={"argv": list(argv) if argv is not None else sys.argv[1:]},
        )
    except USER_ERRORS as e:
        logger.debug("User error", exc_info=True)
        print(f"pcav {args.command}: error: {e}", file=sys.stderr)
        return 1
    except Exception:
        logger.exception(f"Internal error in '{args.command}'")
        return 2


def run() -> None:
    """Console entry point."""
    load_dotenv()
    debug_level = int(os.getenv("DEBUG_LEVEL", "0"))
    logging.basicConfig(
        level=logging.DEBUG if debug_level > 0 else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    sys.exit(main())


if __name__ == "__main__":
    run()
